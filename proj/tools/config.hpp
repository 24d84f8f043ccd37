#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "svpde/error.hpp"

namespace svpde::cli {

/// Config problem tied to a line of the source (0 when it concerns the file as a whole).
class ParseError : public ConfigError {
public:
    ParseError(const std::string& source, int line, const std::string& message);
    int line() const noexcept { return line_; }

private:
    int line_;
};

/// Flat `key = value` lines grouped by `[section]` headers. Keys before the first header belong
/// to the top level: experiment, seed, threads, out.
class ExperimentConfig {
public:
    static ExperimentConfig parse(std::istream& is, const std::string& source = "<config>");
    static ExperimentConfig parse_string(const std::string& text, const std::string& source = "<config>");
    static ExperimentConfig load(const std::string& path);

    const std::string& experiment() const noexcept { return experiment_; }
    std::uint64_t seed() const noexcept { return seed_; }
    void set_seed(std::uint64_t seed) { seed_ = seed; }
    int threads() const noexcept { return threads_; }
    void set_threads(int threads) { threads_ = threads; }
    const std::string& out_dir() const noexcept { return out_; }
    void set_out_dir(std::string out) { out_ = std::move(out); }

    // Typed accessors. Each one marks the key as used and records the resolved value (defaults
    // included) for the config hash.
    double number(const std::string& section, const std::string& key, double fallback);
    double positive(const std::string& section, const std::string& key, double fallback);
    int integer(const std::string& section, const std::string& key, int fallback, int min_value = 1);
    bool flag(const std::string& section, const std::string& key, bool fallback);
    std::string choice(const std::string& section, const std::string& key, const std::string& fallback,
                       const std::vector<std::string>& allowed);
    std::vector<double> numbers(const std::string& section, const std::string& key, std::vector<double> fallback);
    std::vector<int> integers(const std::string& section, const std::string& key, std::vector<int> fallback,
                              int min_value = 1);
    std::vector<std::string> choices(const std::string& section, const std::string& key,
                                     std::vector<std::string> fallback, const std::vector<std::string>& allowed);

    /// Rejects keys no accessor asked for.
    void check_unused() const;

    /// "experiment=...", "seed=..." and every resolved "section.key=value", sorted. threads and
    /// out are left out: they do not change results.
    std::string canonical() const;
    std::uint64_t hash() const;
    const std::map<std::string, std::string>& resolved() const noexcept { return resolved_; }

private:
    struct Entry {
        std::string value;
        int line = 0;
        mutable bool used = false;
    };

    const Entry* find(const std::string& section, const std::string& key) const;
    [[noreturn]] void fail(const Entry* entry, const std::string& section, const std::string& key,
                           const std::string& what) const;
    void record(const std::string& section, const std::string& key, std::string value);

    std::string source_;
    std::string experiment_;
    std::uint64_t seed_ = 1;
    int threads_ = 0;
    std::string out_;
    std::map<std::string, std::map<std::string, Entry>> sections_;
    std::map<std::string, std::string> resolved_;
};

/// Shortest round-trip text of a double.
std::string format_number(double v);

const std::vector<std::string>& experiment_names();

}  // namespace svpde::cli
