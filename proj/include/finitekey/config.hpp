#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "finitekey/channel.hpp"
#include "finitekey/experiments.hpp"

namespace finitekey {

/// Everything a command needs: link, protocol and optimizer settings.
struct RunConfig {
    ChannelConfig channel;
    ProtocolConfig protocol;
    OptimizationSpec optimization;
};

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& source, int line, const std::string& message);
    int line() const noexcept { return line_; }

private:
    int line_;
};

/// Recognized keys, in the order write_config emits them.
std::vector<std::string> config_keys();

/**
 * Parses flat `key = value` text on top of `base`. Blank lines and `#`
 * comments are ignored. Unknown keys, duplicates, malformed numbers and
 * values that fail validation raise ConfigError; `base` is never modified.
 */
RunConfig parse_config(std::istream& in, const std::string& source, const RunConfig& base = {});
RunConfig load_config(const std::string& path, const RunConfig& base = {});

/// Writes every key; parse_config on the output reproduces `config` exactly.
void write_config(std::ostream& out, const RunConfig& config);

/// Throws std::domain_error on any invalid field.
void validate(const RunConfig& config);

}  // namespace finitekey
