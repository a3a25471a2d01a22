#include "menkf/config.hpp"

#include "menkf/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace menkf {

namespace {

std::string trim(const std::string& s)
{
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line)
{
    bool in_quote = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"')
            in_quote = !in_quote;
        else if (line[i] == '#' && !in_quote)
            return line.substr(0, i);
    }
    return line;
}

struct RawValue {
    std::string text;
    int line = 0;
};

struct RawConfig {
    std::map<std::string, RawValue> entries; // "section.key" or "key"
    std::string origin;

    std::string where(const RawValue& v) const { return origin + ":" + std::to_string(v.line); }
};

RawConfig tokenize(const std::string& text, const std::string& origin)
{
    RawConfig raw;
    raw.origin = origin;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(strip_comment(line));
        if (body.empty())
            continue;
        if (body.front() == '[') {
            if (body.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(line_no) + ": malformed section header '" +
                                  body + "'");
            section = trim(body.substr(1, body.size() - 2));
            if (section.empty())
                throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty section name");
            continue;
        }
        const std::size_t eq = body.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value', got '" +
                              body + "'");
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key or value");
        const std::string full = section.empty() ? key : section + "." + key;
        if (raw.entries.count(full))
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + full + "'");
        raw.entries[full] = RawValue{value, line_no};
    }
    return raw;
}

class Reader {
public:
    Reader(RawConfig raw) : raw_(std::move(raw)) {}

    bool has(const std::string& key) const { return raw_.entries.count(key) > 0; }

    double number(const std::string& key)
    {
        const RawValue v = take(key);
        return parse_number(v.text, key, v);
    }

    int integer(const std::string& key)
    {
        const RawValue v = take(key);
        const double d = parse_number(v.text, key, v);
        const int i = static_cast<int>(std::llround(d));
        if (std::abs(d - i) > 0.0)
            throw ConfigError(raw_.where(v) + ": key '" + key + "' must be an integer, got '" + v.text + "'");
        return i;
    }

    std::uint64_t unsigned64(const std::string& key)
    {
        const RawValue v = take(key);
        std::uint64_t out = 0;
        if (std::sscanf(v.text.c_str(), "%" SCNu64, &out) != 1)
            throw ConfigError(raw_.where(v) + ": key '" + key + "' must be an unsigned integer, got '" +
                              v.text + "'");
        return out;
    }

    bool boolean(const std::string& key)
    {
        const RawValue v = take(key);
        if (v.text == "true")
            return true;
        if (v.text == "false")
            return false;
        throw ConfigError(raw_.where(v) + ": key '" + key + "' must be true or false, got '" + v.text + "'");
    }

    std::string string(const std::string& key)
    {
        const RawValue v = take(key);
        std::string s = v.text;
        if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
            s = s.substr(1, s.size() - 2);
        return s;
    }

    std::vector<double> number_list(const std::string& key)
    {
        const RawValue v = take(key);
        std::string body = v.text;
        if (body.size() < 2 || body.front() != '[' || body.back() != ']')
            throw ConfigError(raw_.where(v) + ": key '" + key + "' must be a list like [a, b]");
        body = body.substr(1, body.size() - 2);
        std::vector<double> out;
        std::string item;
        std::istringstream in(body);
        while (std::getline(in, item, ',')) {
            item = trim(item);
            if (item.empty())
                throw ConfigError(raw_.where(v) + ": key '" + key + "' has an empty list element");
            out.push_back(parse_number(item, key, v));
        }
        return out;
    }

    /// All consumed; anything left is unknown.
    void finish() const
    {
        for (const auto& [key, value] : raw_.entries)
            if (!consumed_.count(key))
                throw ConfigError(raw_.where(value) + ": unknown key '" + key + "'");
    }

private:
    RawValue take(const std::string& key)
    {
        auto it = raw_.entries.find(key);
        if (it == raw_.entries.end())
            throw ConfigError(raw_.origin + ": missing required key '" + key + "'");
        consumed_.insert(it->first);
        return it->second;
    }

    double parse_number(const std::string& text, const std::string& key, const RawValue& v) const
    {
        char* end = nullptr;
        const double d = std::strtod(text.c_str(), &end);
        if (end == text.c_str() || *end != '\0')
            throw ConfigError(raw_.where(v) + ": key '" + key + "' must be a number, got '" + text + "'");
        return d;
    }

    RawConfig raw_;
    std::set<std::string> consumed_;
};

const char* kRequiredKeys[] = {
    "seed",          "model.model",           "model.dt",
    "grid.n_elements", "grid.domain_length",  "grid.coarsening_ratio",
    "filter.n_ensemble", "filter.obs_noise_variance", "filter.obs_every_n_steps",
    "filter.param_prior_mean", "filter.param_prior_variance",
    "experiment.da_window", "experiment.truth_theta",
};

} // namespace

AssimilationConfig parse_config_text(const std::string& text, const std::string& origin)
{
    RawConfig raw = tokenize(text, origin);
    if (raw.entries.empty()) {
        std::string msg = origin + ": empty configuration; required keys:";
        for (const char* k : kRequiredKeys)
            msg += std::string(" ") + k;
        throw ConfigError(msg);
    }

    Reader r(std::move(raw));
    AssimilationConfig cfg;

    cfg.seed = r.unsigned64("seed");
    if (r.has("output_dir"))
        cfg.output_dir = r.string("output_dir");

    cfg.model = r.string("model.model");
    if (cfg.model != "burgers" && cfg.model != "euler")
        throw ConfigError(origin + ": key 'model.model' must be burgers or euler, got '" + cfg.model + "'");
    cfg.dt = r.number("model.dt");
    if (cfg.model == "burgers") {
        if (r.has("model.reynolds"))
            cfg.reynolds = r.number("model.reynolds");
        if (r.has("model.u0"))
            cfg.u0 = r.number("model.u0");
    } else {
        if (r.has("model.mach"))
            cfg.mach = r.number("model.mach");
        if (r.has("model.gamma"))
            cfg.gamma = r.number("model.gamma");
        if (r.has("model.rho0"))
            cfg.rho0 = r.number("model.rho0");
        if (r.has("model.T0"))
            cfg.T0 = r.number("model.T0");
        if (r.has("model.filter_strength"))
            cfg.filter_strength = r.number("model.filter_strength");
    }

    cfg.n_elements = r.integer("grid.n_elements");
    cfg.domain_length = r.number("grid.domain_length");
    cfg.coarsening_ratio = r.integer("grid.coarsening_ratio");

    cfg.n_ensemble = r.integer("filter.n_ensemble");
    cfg.obs_noise_variance = r.number("filter.obs_noise_variance");
    cfg.obs_every_n_steps = r.integer("filter.obs_every_n_steps");
    cfg.param_prior_mean = r.number_list("filter.param_prior_mean");
    cfg.param_prior_variance = r.number_list("filter.param_prior_variance");
    if (r.has("filter.param_inflation"))
        cfg.param_inflation = r.number("filter.param_inflation");

    if (r.has("menkf.smoothing_relaxation"))
        cfg.smoothing_relaxation = r.number("menkf.smoothing_relaxation");
    if (r.has("menkf.enable_state_correction"))
        cfg.enable_state_correction = r.boolean("menkf.enable_state_correction");

    if (r.has("experiment.spinup_time"))
        cfg.spinup_time = r.number("experiment.spinup_time");
    cfg.da_window = r.number("experiment.da_window");
    if (r.has("experiment.obs_window")) {
        const std::vector<double> w = r.number_list("experiment.obs_window");
        if (w.size() != 2)
            throw ConfigError(origin + ": key 'experiment.obs_window' must have two entries");
        cfg.obs_window_lo = w[0];
        cfg.obs_window_hi = w[1];
    }
    cfg.truth_theta = r.number_list("experiment.truth_theta");
    if (r.has("experiment.snapshot_times"))
        cfg.snapshot_times = r.number_list("experiment.snapshot_times");

    r.finish();
    validate_config(cfg);
    return cfg;
}

AssimilationConfig parse_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path);
}

void validate_config(const AssimilationConfig& cfg)
{
    auto fail = [](const std::string& key, const std::string& msg) {
        throw ConfigError("config key '" + key + "': " + msg);
    };

    if (cfg.n_elements < 1)
        fail("grid.n_elements", "must be positive");
    if (cfg.domain_length <= 0.0)
        fail("grid.domain_length", "must be positive");
    if (cfg.coarsening_ratio < 1)
        fail("grid.coarsening_ratio", "must be >= 1");
    if (cfg.n_elements % cfg.coarsening_ratio != 0)
        fail("grid.coarsening_ratio", std::to_string(cfg.n_elements) + " elements are not divisible by " +
                                          "coarsening ratio " + std::to_string(cfg.coarsening_ratio));
    if (cfg.dt <= 0.0)
        fail("model.dt", "must be positive");

    const double dx = cfg.domain_length / cfg.n_elements;
    const double speed = cfg.model == "euler" ? 1.0 : std::abs(cfg.u0);
    if (cfg.dt * speed / dx >= 1.0)
        fail("model.dt", "advective CFL " + std::to_string(cfg.dt * speed / dx) + " >= 1 with dx=" +
                             std::to_string(dx));

    if (cfg.model == "burgers" && cfg.reynolds <= 0.0)
        fail("model.reynolds", "must be positive");
    if (cfg.model == "euler") {
        if (cfg.mach <= 0.0 || cfg.mach >= 1.0)
            fail("model.mach", "must lie in (0, 1)");
        if (cfg.gamma <= 1.0)
            fail("model.gamma", "must exceed 1");
        if (cfg.rho0 <= 0.0 || cfg.T0 <= 0.0)
            fail("model.rho0/T0", "must be positive");
        if (cfg.filter_strength < 0.0 || cfg.filter_strength > 1.0)
            fail("model.filter_strength", "must lie in [0, 1]");
    }

    if (cfg.n_ensemble < 2)
        fail("filter.n_ensemble", "must be >= 2");
    if (cfg.obs_noise_variance < 0.0)
        fail("filter.obs_noise_variance", "must be >= 0");
    if (cfg.obs_every_n_steps < 1)
        fail("filter.obs_every_n_steps", "must be >= 1");
    const std::size_t np = static_cast<std::size_t>(cfg.n_params());
    if (cfg.param_prior_mean.size() != np)
        fail("filter.param_prior_mean", "needs " + std::to_string(np) + " entries for model " + cfg.model);
    if (cfg.param_prior_variance.size() != np)
        fail("filter.param_prior_variance", "needs " + std::to_string(np) + " entries for model " + cfg.model);
    for (double v : cfg.param_prior_variance)
        if (v < 0.0)
            fail("filter.param_prior_variance", "entries must be >= 0");
    if (cfg.param_inflation < 0.0)
        fail("filter.param_inflation", "must be >= 0");

    if (cfg.smoothing_relaxation < 0.0 || cfg.smoothing_relaxation > 1.0)
        fail("menkf.smoothing_relaxation", "must lie in [0, 1]");

    if (cfg.spinup_time < 0.0)
        fail("experiment.spinup_time", "must be >= 0");
    if (cfg.da_window <= 0.0)
        fail("experiment.da_window", "must be positive");
    if (!(cfg.obs_window_lo < cfg.obs_window_hi))
        fail("experiment.obs_window", "must satisfy lo < hi");
    if (cfg.obs_window_lo < 0.0 || cfg.obs_window_hi > cfg.domain_length)
        fail("experiment.obs_window", "must lie inside the domain");
    if (cfg.truth_theta.size() != 2)
        fail("experiment.truth_theta", "needs 2 entries (burgers: amplitude+phase, euler: theta0+b)");
    for (double ts : cfg.snapshot_times)
        if (ts < 0.0 || ts > cfg.da_window)
            fail("experiment.snapshot_times", "entries must lie in [0, da_window]");

    // The observation window must contain at least one coarse node past the
    // inlet, and the ensemble must be large enough that the sampled innovation
    // matrix (rank at most 2 (N_e - 1)) can be full rank.
    const double coarse_dx = dx * cfg.coarsening_ratio;
    int n_sensors = 0;
    for (int j = 1; j <= cfg.n_elements / cfg.coarsening_ratio; ++j) {
        const double x = j * coarse_dx;
        if (x > cfg.obs_window_lo && x <= cfg.obs_window_hi + 1e-12 * cfg.domain_length)
            ++n_sensors;
    }
    if (n_sensors == 0)
        fail("experiment.obs_window", "contains no coarse-grid sensor node");
    if (2 * (cfg.n_ensemble - 1) < n_sensors)
        fail("filter.n_ensemble", std::to_string(cfg.n_ensemble) + " members cannot resolve " +
                                      std::to_string(n_sensors) + " sensors (need 2(N_e-1) >= sensors)");
}

namespace {

std::string num(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string list(const std::vector<double>& v)
{
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i)
            s += ", ";
        s += num(v[i]);
    }
    return s + "]";
}

} // namespace

std::string serialize_config(const AssimilationConfig& c)
{
    std::ostringstream o;
    o << "seed = " << c.seed << "\n";
    o << "output_dir = \"" << c.output_dir << "\"\n\n";
    o << "[model]\n";
    o << "model = \"" << c.model << "\"\n";
    o << "dt = " << num(c.dt) << "\n";
    if (c.model == "burgers") {
        o << "reynolds = " << num(c.reynolds) << "\n";
        o << "u0 = " << num(c.u0) << "\n";
    } else {
        o << "mach = " << num(c.mach) << "\n";
        o << "gamma = " << num(c.gamma) << "\n";
        o << "rho0 = " << num(c.rho0) << "\n";
        o << "T0 = " << num(c.T0) << "\n";
        o << "filter_strength = " << num(c.filter_strength) << "\n";
    }
    o << "\n[grid]\n";
    o << "n_elements = " << c.n_elements << "\n";
    o << "domain_length = " << num(c.domain_length) << "\n";
    o << "coarsening_ratio = " << c.coarsening_ratio << "\n";
    o << "\n[filter]\n";
    o << "n_ensemble = " << c.n_ensemble << "\n";
    o << "obs_noise_variance = " << num(c.obs_noise_variance) << "\n";
    o << "obs_every_n_steps = " << c.obs_every_n_steps << "\n";
    o << "param_prior_mean = " << list(c.param_prior_mean) << "\n";
    o << "param_prior_variance = " << list(c.param_prior_variance) << "\n";
    o << "param_inflation = " << num(c.param_inflation) << "\n";
    o << "\n[menkf]\n";
    o << "smoothing_relaxation = " << num(c.smoothing_relaxation) << "\n";
    o << "enable_state_correction = " << (c.enable_state_correction ? "true" : "false") << "\n";
    o << "\n[experiment]\n";
    o << "spinup_time = " << num(c.spinup_time) << "\n";
    o << "da_window = " << num(c.da_window) << "\n";
    o << "obs_window = [" << num(c.obs_window_lo) << ", " << num(c.obs_window_hi) << "]\n";
    o << "truth_theta = " << list(c.truth_theta) << "\n";
    if (!c.snapshot_times.empty())
        o << "snapshot_times = " << list(c.snapshot_times) << "\n";
    return o.str();
}

std::string config_hash(const AssimilationConfig& cfg)
{
    const std::string text = serialize_config(cfg);
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001B3ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace menkf
