#pragma once

#include "qbic/harness.hpp"

#include <filesystem>
#include <string>

namespace qbic {

inline constexpr const char* kLibraryVersion = "1.0.0";

/// JSON documents. Doubles print with round-trip precision; non-finite values print as null.
std::string fit_json(const FitResult& fit);
std::string report_json(const CriterionReport& report);
std::string selection_json(const SelectionOutcome& outcome);

/// Completion marker written after every other output of a command.
struct RunManifest {
    std::string command;
    std::string config_echo;  ///< raw configuration text
    std::uint64_t master_seed = 0;
    std::string version = kLibraryVersion;
    std::string timestamp;  ///< UTC, ISO 8601
    double wall_seconds = 0.0;
    std::vector<std::string> outputs;
    bool partial = false;
    long blowups = 0;
    long non_convergences = 0;
    long excluded = 0;
    std::string status = "ok";

    [[nodiscard]] std::string to_json() const;
};

std::string utc_timestamp();

/// Writes `text` to `path`, creating parent directories. Throws Error on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace qbic
