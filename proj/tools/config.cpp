#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "svpde/hash.hpp"

namespace svpde::cli {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

bool parse_double(const std::string& text, double& out) {
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool parse_int(const std::string& text, long long& out) {
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, out);
    return ec == std::errc() && ptr == end;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::string_view rest = text;
    while (true) {
        const auto comma = rest.find(',');
        items.push_back(trim(rest.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
    }
    return items;
}

std::string qualified(const std::string& section, const std::string& key) {
    return section.empty() ? key : section + "." + key;
}

template <class T, class F>
std::string join(const std::vector<T>& items, F&& fmt) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += fmt(items[i]);
    }
    return out;
}

}  // namespace

ParseError::ParseError(const std::string& source, int line, const std::string& message)
    : ConfigError(line > 0 ? source + ":" + std::to_string(line) + ": " + message : source + ": " + message),
      line_(line) {}

std::string format_number(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"markov-heat",    "markov-linear-driver", "markov-kinked-terminal",
                                                "ppde-lookback",  "comparison",           "sde-convergence",
                                                "bsde-limit",     "ito-residual",         "fejer-sweep"};
    return names;
}

ExperimentConfig ExperimentConfig::parse(std::istream& is, const std::string& source) {
    ExperimentConfig cfg;
    cfg.source_ = source;
    std::string section;
    std::string raw;
    int line = 0;
    int experiment_line = 0;
    while (std::getline(is, raw)) {
        ++line;
        const auto hash = raw.find_first_of("#;");
        const std::string text = trim(std::string_view(raw).substr(0, hash));
        if (text.empty()) continue;
        if (text.front() == '[') {
            if (text.back() != ']') throw ParseError(source, line, "unterminated section header");
            section = trim(std::string_view(text).substr(1, text.size() - 2));
            if (section.empty() || section.find_first_of(" \t.=") != std::string::npos)
                throw ParseError(source, line, "invalid section name '" + section + "'");
            continue;
        }
        const auto eq = text.find('=');
        if (eq == std::string::npos) throw ParseError(source, line, "expected 'key = value'");
        const std::string key = trim(std::string_view(text).substr(0, eq));
        const std::string value = trim(std::string_view(text).substr(eq + 1));
        if (key.empty() || key.find_first_of(" \t.") != std::string::npos)
            throw ParseError(source, line, "invalid key '" + key + "'");
        if (value.empty()) throw ParseError(source, line, "missing value for '" + key + "'");
        auto [it, inserted] = cfg.sections_[section].try_emplace(key, Entry{value, line});
        if (!inserted)
            throw ParseError(source, line,
                             "duplicate key '" + qualified(section, key) + "' (first set on line " +
                                 std::to_string(it->second.line) + ")");
        if (section.empty() && key == "experiment") experiment_line = line;
    }

    const Entry* name = cfg.find("", "experiment");
    if (!name) throw ParseError(source, 0, "missing 'experiment' key");
    name->used = true;
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), name->value) == names.end())
        throw ParseError(source, experiment_line, "unknown experiment '" + name->value + "'");
    cfg.experiment_ = name->value;
    cfg.seed_ = static_cast<std::uint64_t>(cfg.integer("", "seed", 1, 0));
    cfg.threads_ = cfg.integer("", "threads", 0, 0);
    if (const Entry* out = cfg.find("", "out")) {
        out->used = true;
        cfg.out_ = out->value;
    } else {
        cfg.out_ = "results/" + cfg.experiment_;
    }
    cfg.resolved_.erase("seed");
    cfg.resolved_.erase("threads");
    return cfg;
}

ExperimentConfig ExperimentConfig::parse_string(const std::string& text, const std::string& source) {
    std::istringstream is(text);
    return parse(is, source);
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParseError(path, 0, "cannot open config file");
    return parse(is, path);
}

const ExperimentConfig::Entry* ExperimentConfig::find(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    const auto e = s->second.find(key);
    if (e == s->second.end()) return nullptr;
    e->second.used = true;
    return &e->second;
}

void ExperimentConfig::fail(const Entry* entry, const std::string& section, const std::string& key,
                            const std::string& what) const {
    throw ParseError(source_, entry ? entry->line : 0, "'" + qualified(section, key) + "' " + what);
}

void ExperimentConfig::record(const std::string& section, const std::string& key, std::string value) {
    resolved_[qualified(section, key)] = std::move(value);
}

double ExperimentConfig::number(const std::string& section, const std::string& key, double fallback) {
    double v = fallback;
    const Entry* e = find(section, key);
    if (e && !parse_double(e->value, v)) fail(e, section, key, "must be a number, got '" + e->value + "'");
    record(section, key, format_number(v));
    return v;
}

double ExperimentConfig::positive(const std::string& section, const std::string& key, double fallback) {
    const double v = number(section, key, fallback);
    if (!(v > 0.0)) fail(find(section, key), section, key, "must be positive");
    return v;
}

int ExperimentConfig::integer(const std::string& section, const std::string& key, int fallback, int min_value) {
    long long v = fallback;
    const Entry* e = find(section, key);
    if (e && !parse_int(e->value, v)) fail(e, section, key, "must be an integer, got '" + e->value + "'");
    if (v < min_value || v > 2147483647LL) fail(e, section, key, "must be an integer >= " + std::to_string(min_value));
    record(section, key, std::to_string(v));
    return static_cast<int>(v);
}

bool ExperimentConfig::flag(const std::string& section, const std::string& key, bool fallback) {
    bool v = fallback;
    if (const Entry* e = find(section, key)) {
        if (e->value == "true" || e->value == "yes" || e->value == "1")
            v = true;
        else if (e->value == "false" || e->value == "no" || e->value == "0")
            v = false;
        else
            fail(e, section, key, "must be true or false, got '" + e->value + "'");
    }
    record(section, key, v ? "true" : "false");
    return v;
}

std::string ExperimentConfig::choice(const std::string& section, const std::string& key, const std::string& fallback,
                                     const std::vector<std::string>& allowed) {
    std::string v = fallback;
    if (const Entry* e = find(section, key)) {
        v = e->value;
        if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
            fail(e, section, key, "must be one of " + join(allowed, [](const std::string& s) { return s; }) +
                                      ", got '" + v + "'");
    }
    record(section, key, v);
    return v;
}

std::vector<double> ExperimentConfig::numbers(const std::string& section, const std::string& key,
                                              std::vector<double> fallback) {
    if (const Entry* e = find(section, key)) {
        fallback.clear();
        for (const auto& item : split_list(e->value)) {
            double v = 0.0;
            if (!parse_double(item, v)) fail(e, section, key, "must be a list of numbers, got '" + item + "'");
            fallback.push_back(v);
        }
    }
    record(section, key, join(fallback, format_number));
    return fallback;
}

std::vector<int> ExperimentConfig::integers(const std::string& section, const std::string& key,
                                            std::vector<int> fallback, int min_value) {
    if (const Entry* e = find(section, key)) {
        fallback.clear();
        for (const auto& item : split_list(e->value)) {
            long long v = 0;
            if (!parse_int(item, v) || v < min_value || v > 2147483647LL)
                fail(e, section, key, "must be a list of integers >= " + std::to_string(min_value) + ", got '" + item + "'");
            fallback.push_back(static_cast<int>(v));
        }
    }
    record(section, key, join(fallback, [](int v) { return std::to_string(v); }));
    return fallback;
}

std::vector<std::string> ExperimentConfig::choices(const std::string& section, const std::string& key,
                                                   std::vector<std::string> fallback,
                                                   const std::vector<std::string>& allowed) {
    if (const Entry* e = find(section, key)) {
        fallback = split_list(e->value);
        for (const auto& item : fallback)
            if (std::find(allowed.begin(), allowed.end(), item) == allowed.end())
                fail(e, section, key, "entries must be one of " +
                                          join(allowed, [](const std::string& s) { return s; }) + ", got '" + item + "'");
    }
    record(section, key, join(fallback, [](const std::string& s) { return s; }));
    return fallback;
}

void ExperimentConfig::check_unused() const {
    const Entry* first = nullptr;
    std::string name;
    for (const auto& [section, entries] : sections_)
        for (const auto& [key, entry] : entries)
            if (!entry.used && (!first || entry.line < first->line)) {
                first = &entry;
                name = section.empty() ? key : "[" + section + "] " + key;
            }
    if (first) throw ParseError(source_, first->line, "unknown key '" + name + "' for experiment " + experiment_);
}

std::string ExperimentConfig::canonical() const {
    std::string out = "experiment=" + experiment_ + "\nseed=" + std::to_string(seed_) + "\n";
    for (const auto& [key, value] : resolved_) out += key + "=" + value + "\n";
    return out;
}

std::uint64_t ExperimentConfig::hash() const { return fnv1a(canonical()); }

}  // namespace svpde::cli
