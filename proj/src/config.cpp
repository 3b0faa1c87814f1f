#include "finitekey/config.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <variant>

#include "finitekey/format.hpp"

namespace finitekey {

namespace {

using Slot = std::variant<double*, int*, std::uint64_t*>;

struct Entry {
    const char* key;
    std::function<Slot(RunConfig&)> slot;
};

const std::vector<Entry>& entries() {
    static const std::vector<Entry> table = {
        {"fiber_length_km", [](RunConfig& c) -> Slot { return &c.channel.fiber_length_km; }},
        {"attenuation_db_per_km", [](RunConfig& c) -> Slot { return &c.channel.attenuation_db_per_km; }},
        {"detector_efficiency", [](RunConfig& c) -> Slot { return &c.channel.detector_efficiency; }},
        {"dark_count_prob", [](RunConfig& c) -> Slot { return &c.channel.dark_count_prob; }},
        {"afterpulse_prob", [](RunConfig& c) -> Slot { return &c.channel.afterpulse_prob; }},
        {"receiver_loss_db", [](RunConfig& c) -> Slot { return &c.channel.receiver_loss_db; }},
        {"misalignment_error", [](RunConfig& c) -> Slot { return &c.channel.misalignment_error; }},
        {"num_detectors", [](RunConfig& c) -> Slot { return &c.channel.num_detectors; }},
        {"clock_rate_hz", [](RunConfig& c) -> Slot { return &c.protocol.clock_rate_hz; }},
        {"acquisition_time_s", [](RunConfig& c) -> Slot { return &c.protocol.acquisition_time_s; }},
        {"p_x", [](RunConfig& c) -> Slot { return &c.protocol.p_x; }},
        {"p_u", [](RunConfig& c) -> Slot { return &c.protocol.class_prob[0]; }},
        {"p_v", [](RunConfig& c) -> Slot { return &c.protocol.class_prob[1]; }},
        {"p_w", [](RunConfig& c) -> Slot { return &c.protocol.class_prob[2]; }},
        {"intensity_u", [](RunConfig& c) -> Slot { return &c.protocol.intensity[0]; }},
        {"intensity_v", [](RunConfig& c) -> Slot { return &c.protocol.intensity[1]; }},
        {"intensity_w", [](RunConfig& c) -> Slot { return &c.protocol.intensity[2]; }},
        {"gamma", [](RunConfig& c) -> Slot { return &c.protocol.gamma; }},
        {"eps_sec", [](RunConfig& c) -> Slot { return &c.protocol.eps_sec; }},
        {"eps_ver", [](RunConfig& c) -> Slot { return &c.protocol.eps_ver; }},
        {"q_tol_cap", [](RunConfig& c) -> Slot { return &c.protocol.q_tol_cap; }},
        {"photon_cutoff", [](RunConfig& c) -> Slot { return &c.protocol.photon_cutoff; }},
        {"ec_efficiency", [](RunConfig& c) -> Slot { return &c.protocol.ec_efficiency; }},
        {"z1_dominance_ratio", [](RunConfig& c) -> Slot { return &c.protocol.z1_dominance_ratio; }},
        {"opt_p_x_min", [](RunConfig& c) -> Slot { return &c.optimization.p_x.lower; }},
        {"opt_p_x_max", [](RunConfig& c) -> Slot { return &c.optimization.p_x.upper; }},
        {"opt_p_u_min", [](RunConfig& c) -> Slot { return &c.optimization.p_u.lower; }},
        {"opt_p_u_max", [](RunConfig& c) -> Slot { return &c.optimization.p_u.upper; }},
        {"opt_p_v_min", [](RunConfig& c) -> Slot { return &c.optimization.p_v.lower; }},
        {"opt_p_v_max", [](RunConfig& c) -> Slot { return &c.optimization.p_v.upper; }},
        {"opt_u_min", [](RunConfig& c) -> Slot { return &c.optimization.u.lower; }},
        {"opt_u_max", [](RunConfig& c) -> Slot { return &c.optimization.u.upper; }},
        {"opt_v_min", [](RunConfig& c) -> Slot { return &c.optimization.v.lower; }},
        {"opt_v_max", [](RunConfig& c) -> Slot { return &c.optimization.v.upper; }},
        {"opt_starts", [](RunConfig& c) -> Slot { return &c.optimization.starts; }},
        {"opt_max_evals", [](RunConfig& c) -> Slot { return &c.optimization.max_evals; }},
        {"opt_seed", [](RunConfig& c) -> Slot { return &c.optimization.seed; }},
    };
    return table;
}

const Entry* find_entry(const std::string& key) {
    for (const Entry& e : entries()) {
        if (key == e.key) return &e;
    }
    return nullptr;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end;
}

void validate_box(const Box& box, const char* name) {
    if (!(box.lower <= box.upper)) {
        throw std::domain_error(std::string(name) + ": box lower bound exceeds upper bound");
    }
}

}  // namespace

ConfigError::ConfigError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(source + ":" + std::to_string(line) + ": " + message), line_(line) {}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    for (const Entry& e : entries()) keys.emplace_back(e.key);
    return keys;
}

void validate(const RunConfig& config) {
    validate(config.channel);
    validate(config.protocol);
    const OptimizationSpec& o = config.optimization;
    validate_box(o.p_x, "opt_p_x");
    validate_box(o.p_u, "opt_p_u");
    validate_box(o.p_v, "opt_p_v");
    validate_box(o.u, "opt_u");
    validate_box(o.v, "opt_v");
    if (o.starts < 1) throw std::domain_error("opt_starts must be at least 1");
    if (o.max_evals < 1) throw std::domain_error("opt_max_evals must be at least 1");
}

RunConfig parse_config(std::istream& in, const std::string& source, const RunConfig& base) {
    RunConfig config = base;
    std::map<std::string, int> seen;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw.substr(0, raw.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source, line_no, "expected `key = value`");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const Entry* entry = find_entry(key);
        if (!entry) throw ConfigError(source, line_no, "unknown key `" + key + "`");
        if (!seen.emplace(key, line_no).second) {
            throw ConfigError(source, line_no, "duplicate key `" + key + "`");
        }
        const bool ok = std::visit([&](auto* slot) { return parse_number(value, *slot); },
                                   entry->slot(config));
        if (!ok) {
            throw ConfigError(source, line_no, "invalid value `" + value + "` for `" + key + "`");
        }
    }
    try {
        validate(config);
    } catch (const std::domain_error& e) {
        // Messages start with the field name; point at the line that set it.
        const std::string message = e.what();
        const auto it = seen.find(message.substr(0, message.find(' ')));
        throw ConfigError(source, it != seen.end() ? it->second : line_no, message);
    }
    return config;
}

RunConfig load_config(const std::string& path, const RunConfig& base) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, 0, "cannot open file");
    return parse_config(in, path, base);
}

void write_config(std::ostream& out, const RunConfig& config) {
    RunConfig copy = config;
    for (const Entry& e : entries()) {
        out << e.key << " = ";
        std::visit(
            [&](auto* slot) {
                if constexpr (std::is_same_v<std::remove_pointer_t<decltype(slot)>, double>) {
                    out << format_double(*slot);
                } else {
                    out << *slot;
                }
            },
            e.slot(copy));
        out << '\n';
    }
}

}  // namespace finitekey
