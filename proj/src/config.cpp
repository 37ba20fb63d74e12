#include "ortho/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace ortho {

namespace {

std::string trim(const std::string& s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

}  // namespace

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_string(buffer.str());
}

RunConfig RunConfig::from_string(const std::string& text) {
    RunConfig cfg;
    std::stringstream stream(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(stream, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) +
                              " is not of the form key=value: '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(lineno) + " has an empty key");
        }
        cfg.values_[key] = value;
    }
    return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    values_[key] = value;
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) > 0; }

std::int64_t RunConfig::get_int(const std::string& key, std::int64_t fallback) const {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const std::int64_t v = std::stoll(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects an integer, got '" + it->second + "'");
    }
}

double RunConfig::get_real(const std::string& key, double fallback) const {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "' expects a real number, got '" + it->second + "'");
    }
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
    consumed_.insert(key);
    const auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    std::string v = it->second;
    std::transform(v.begin(), v.end(), v.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("key '" + key + "' expects a boolean, got '" + it->second + "'");
}

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) const {
    consumed_.insert(key);
    const auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::vector<std::string> RunConfig::unconsumed_keys() const {
    std::vector<std::string> unknown;
    for (const auto& [key, value] : values_) {
        if (!consumed_.count(key)) unknown.push_back(key);
    }
    return unknown;
}

ManifoldOptimizer parse_optimizer(const std::string& name) {
    if (name == "rsgd") return ManifoldOptimizer::Rsgd;
    if (name == "radam") return ManifoldOptimizer::Radam;
    throw ConfigError("unknown optimizer '" + name + "' (expected rsgd or radam)");
}

TrainingArm parse_arm(const std::string& name) {
    if (name == "omlp") return TrainingArm::Omlp;
    if (name == "penalty") return TrainingArm::Penalty;
    if (name == "unconstrained") return TrainingArm::Unconstrained;
    throw ConfigError("unknown arm '" + name + "' (expected omlp, penalty or unconstrained)");
}

const std::vector<std::pair<std::string, std::string>>& decouple_config_keys() {
    static const std::vector<std::pair<std::string, std::string>> keys = {
        {"channels", "feature channels C (default 16)"},
        {"positions", "patch positions S per sample (default 8)"},
        {"related_channels", "planted domain-separating channels k (default 4)"},
        {"samples_per_domain", "samples per domain (default 512)"},
        {"mixing_strength", "cross-channel leakage in [0,1) (default 0.1)"},
        {"noise_sigma", "additive Gaussian noise level (default 0.05)"},
        {"seed", "master seed; all randomness derives from it (default 42)"},
        {"epochs", "training epochs (default 12)"},
        {"optimizer", "manifold optimizer: rsgd | radam (default rsgd)"},
        {"base_lr", "base learning rate (default 1e-3)"},
        {"hold_epochs", "epochs at base_lr before decay (default 6)"},
        {"decay_epochs", "epochs of linear decay to zero (default 6)"},
        {"embed_layers", "projection head depth (default 1)"},
        {"joint_updates", "joint classifier/head steps; false alternates (default true)"},
        {"detach_weights", "heat vectors are constants in the loss (default true)"},
        {"penalty_lambda", "orthogonality penalty coefficient (default 1.0)"},
        {"arms", "comma list of arms to run (default omlp,penalty,unconstrained)"},
    };
    return keys;
}

SyntheticConfig synthetic_config_from(const RunConfig& cfg) {
    SyntheticConfig out;
    out.channels = static_cast<std::size_t>(cfg.get_int("channels", 16));
    out.positions = static_cast<std::size_t>(cfg.get_int("positions", 8));
    out.related_channels = static_cast<std::size_t>(cfg.get_int("related_channels", 4));
    out.samples_per_domain = static_cast<std::size_t>(cfg.get_int("samples_per_domain", 512));
    out.mixing_strength = cfg.get_real("mixing_strength", 0.1);
    out.noise_sigma = cfg.get_real("noise_sigma", 0.05);
    out.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 42));
    out.epochs = static_cast<std::size_t>(cfg.get_int("epochs", 12));
    out.optimizer = parse_optimizer(cfg.get_string("optimizer", "rsgd"));
    out.schedule.base_lr = cfg.get_real("base_lr", 1e-3);
    out.schedule.hold_epochs = static_cast<std::size_t>(cfg.get_int("hold_epochs", 6));
    out.schedule.decay_epochs = static_cast<std::size_t>(cfg.get_int("decay_epochs", 6));
    out.embed_layers = static_cast<std::size_t>(cfg.get_int("embed_layers", 1));
    out.joint_updates = cfg.get_bool("joint_updates", true);
    out.detach_weights = cfg.get_bool("detach_weights", true);
    out.penalty_lambda = cfg.get_real("penalty_lambda", 1.0);
    out.validate();
    return out;
}

}  // namespace ortho
