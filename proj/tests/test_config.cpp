#include "menkf/config.hpp"
#include "menkf/errors.hpp"

#include <doctest.h>

#include <string>

using namespace menkf;

#ifndef MENKF_CONFIG_DIR
#define MENKF_CONFIG_DIR "configs"
#endif

TEST_CASE("the bundled Burgers config matches the published setup")
{
    const AssimilationConfig cfg = parse_config(std::string(MENKF_CONFIG_DIR) + "/burgers_rc4.cfg");
    CHECK(cfg.model == "burgers");
    CHECK(cfg.reynolds == 200.0);
    CHECK(cfg.dt == 0.0002);
    CHECK(cfg.n_elements == 800);
    CHECK(cfg.coarsening_ratio == 4);
    CHECK(cfg.n_ensemble == 100);
    CHECK(cfg.obs_noise_variance == 0.0025);
    CHECK(cfg.obs_every_n_steps == 30);
    CHECK(cfg.param_prior_mean == std::vector<double>{0.0, 0.3});
    CHECK(cfg.param_prior_variance == std::vector<double>{0.0025, 0.0025});
    CHECK(cfg.truth_theta == std::vector<double>{0.2, 0.0});
    CHECK(cfg.da_window == 19.0);
}

TEST_CASE("the bundled Euler config parses and validates")
{
    const AssimilationConfig cfg = parse_config(std::string(MENKF_CONFIG_DIR) + "/euler_fa55.cfg");
    CHECK(cfg.model == "euler");
    CHECK(cfg.mach == 0.4);
    CHECK(cfg.gamma == 1.4);
    CHECK(cfg.rho0 == 1.17);
    CHECK(cfg.T0 == 300.0);
    CHECK(cfg.obs_noise_variance == 0.09);
    CHECK(cfg.truth_theta == std::vector<double>{0.015, 10.0});
}

TEST_CASE("an empty file lists the required keys")
{
    bool thrown = false;
    try {
        parse_config_text("", "empty.cfg");
    } catch (const ConfigError& e) {
        thrown = true;
        const std::string msg = e.what();
        CHECK(msg.find("required") != std::string::npos);
        CHECK(msg.find("seed") != std::string::npos);
        CHECK(msg.find("grid.n_elements") != std::string::npos);
        CHECK(msg.find("filter.n_ensemble") != std::string::npos);
    }
    CHECK(thrown);
}

namespace {

std::string valid_text()
{
    return R"(seed = 7
output_dir = "runs/x"
[model]
model = "burgers"
dt = 0.0002
reynolds = 200.0
u0 = 1.0
[grid]
n_elements = 800
domain_length = 10.0
coarsening_ratio = 4
[filter]
n_ensemble = 100
obs_noise_variance = 0.0025
obs_every_n_steps = 30
param_prior_mean = [0.0, 0.3]
param_prior_variance = [0.0025, 0.0025]
[menkf]
smoothing_relaxation = 0.5
[experiment]
da_window = 19.0
truth_theta = [0.2, 0.0]
)";
}

} // namespace

TEST_CASE("round trip: parse, serialize, parse yields the identical config")
{
    const AssimilationConfig a = parse_config_text(valid_text(), "inline.cfg");
    const AssimilationConfig b = parse_config_text(serialize_config(a), "roundtrip.cfg");
    CHECK(a == b);
    CHECK(config_hash(a) == config_hash(b));
}

TEST_CASE("non-divisible coarsening reports both numbers")
{
    std::string text = valid_text();
    const auto pos = text.find("coarsening_ratio = 4");
    text.replace(pos, std::string("coarsening_ratio = 4").size(), "coarsening_ratio = 3");
    bool thrown = false;
    try {
        parse_config_text(text, "bad.cfg");
    } catch (const ConfigError& e) {
        thrown = true;
        const std::string msg = e.what();
        CHECK(msg.find("800") != std::string::npos);
        CHECK(msg.find("3") != std::string::npos);
    }
    CHECK(thrown);
}

TEST_CASE("unknown keys are rejected with file and line")
{
    std::string text = valid_text();
    text += "mystery_key = 12\n";
    bool thrown = false;
    try {
        parse_config_text(text, "unknown.cfg");
    } catch (const ConfigError& e) {
        thrown = true;
        const std::string msg = e.what();
        CHECK(msg.find("mystery_key") != std::string::npos);
        CHECK(msg.find("unknown.cfg:") != std::string::npos);
    }
    CHECK(thrown);
}

TEST_CASE("model-specific keys are rejected under the other model")
{
    std::string text = valid_text();
    text += "[model]\n"; // reopening a section is fine; duplicate keys are not
    bool thrown = false;
    try {
        parse_config_text(text + "mach = 0.4\n", "misplaced.cfg");
    } catch (const ConfigError& e) {
        thrown = true;
        CHECK(std::string(e.what()).find("mach") != std::string::npos);
    }
    CHECK(thrown);
}

TEST_CASE("syntax errors carry the line number")
{
    const std::string text = "seed = 7\nnot a key value line\n";
    bool thrown = false;
    try {
        parse_config_text(text, "syntax.cfg");
    } catch (const ConfigError& e) {
        thrown = true;
        CHECK(std::string(e.what()).find("syntax.cfg:2") != std::string::npos);
    }
    CHECK(thrown);
}

TEST_CASE("CFL and prior-size violations are caught eagerly")
{
    AssimilationConfig cfg = parse_config_text(valid_text(), "v.cfg");
    cfg.dt = 0.02; // CFL = 1.6
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);

    cfg = parse_config_text(valid_text(), "v.cfg");
    cfg.param_prior_mean = {0.0};
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);

    cfg = parse_config_text(valid_text(), "v.cfg");
    cfg.obs_window_lo = 5.0;
    cfg.obs_window_hi = 4.0;
    CHECK_THROWS_AS(validate_config(cfg), ConfigError);
}

TEST_CASE("duplicate keys are rejected")
{
    const std::string text = "seed = 7\nseed = 8\n";
    CHECK_THROWS_AS(parse_config_text(text, "dup.cfg"), ConfigError);
}
