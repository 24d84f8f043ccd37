#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "config.hpp"

namespace svpde::cli {

enum class Check { Within, AtMost, AtLeast, Equal };

struct Metric {
    std::string name;
    Check check = Check::Within;
    double observed = 0.0;
    double se = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;  // Within only
    bool pass = false;

    /// "observed 0.95 (se 0.01), expected >= 0.999"
    std::string describe() const;
};

Metric within(std::string name, double observed, double se, double expected, double tolerance);
Metric at_most(std::string name, double observed, double bound, double se = 0.0);
Metric at_least(std::string name, double observed, double bound, double se = 0.0);
Metric equal(std::string name, double observed, double expected);

struct Table {
    std::string name;  // file stem
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

struct RunSummary {
    std::string experiment;
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
    std::map<std::string, std::string> parameters;
    std::vector<Metric> metrics;
    std::vector<Table> tables;

    bool passed() const;
    std::vector<const Metric*> failures() const;
};

struct CatalogEntry {
    std::string name;
    std::string description;
    std::string anchor;
};

const std::vector<CatalogEntry>& catalog();
std::string catalog_text();
std::string catalog_json();

/// Reads the experiment's parameters (rejecting unknown keys), runs it and collects metrics and
/// tables. Worker count is whatever the caller configured.
RunSummary run_experiment(ExperimentConfig& config);

std::string table_csv(const Table& table);
/// UTF-8 JSON with a fixed key order and no timing data.
std::string summary_json(const RunSummary& summary);
/// <dir>/<table>.csv for every table and <dir>/summary.json.
void write_artifacts(const RunSummary& summary, const std::filesystem::path& dir);

}  // namespace svpde::cli
