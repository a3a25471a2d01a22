#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace menkf {

/// Full description of one twin experiment, parsed from a sectioned
/// key = value file. All physical quantities are nondimensional (times in
/// characteristic times, lengths in forcing wavelengths); grid sizes are
/// element counts.
struct AssimilationConfig {
    // [model]
    std::string model = "burgers"; // "burgers" | "euler"
    double dt = 0.0;
    double reynolds = 200.0; // burgers
    double u0 = 1.0;         // burgers
    double mach = 0.4;       // euler
    double gamma = 1.4;      // euler
    double rho0 = 1.17;      // euler
    double T0 = 300.0;       // euler
    double filter_strength = 1.0; // euler

    // [grid]
    int n_elements = 0;
    double domain_length = 0.0;
    int coarsening_ratio = 1;

    // [filter]
    int n_ensemble = 0;
    double obs_noise_variance = 0.0;
    int obs_every_n_steps = 0;
    std::vector<double> param_prior_mean;
    std::vector<double> param_prior_variance;
    double param_inflation = 0.0;

    // [menkf]
    double smoothing_relaxation = 0.5;
    bool enable_state_correction = true;

    // [experiment]
    double spinup_time = 10.0;
    double da_window = 0.0;
    double obs_window_lo = 0.0;
    double obs_window_hi = 1.0;
    std::vector<double> truth_theta; // burgers: {theta1, theta2}; euler: {theta0, b}
    std::vector<double> snapshot_times;

    // top level
    std::uint64_t seed = 0;
    std::string output_dir = "runs/out";

    // runtime only, never serialized
    int threads = 1;

    int n_params() const { return model == "euler" ? 1 : 2; }

    bool operator==(const AssimilationConfig&) const = default;
};

/// Parse and validate a config file. Syntax errors report the line number;
/// semantic errors report the offending key.
AssimilationConfig parse_config(const std::string& path);

/// Same, from an in-memory string. `origin` names the source in errors.
AssimilationConfig parse_config_text(const std::string& text, const std::string& origin);

/// Canonical text form; parse(serialize(c)) == c.
std::string serialize_config(const AssimilationConfig& cfg);

/// Eager validation of all cross-field preconditions (divisibility of the
/// element count by the coarsening ratio, CFL estimate, prior sizes, ...).
void validate_config(const AssimilationConfig& cfg);

/// FNV-1a hash of the canonical serialization, as a hex string.
std::string config_hash(const AssimilationConfig& cfg);

} // namespace menkf
