#pragma once

// Orchestration behind the command-line tool: runs the requested solvers in
// dependency order (α → u′ → η², ψ → I, Monte Carlo last) and collects a
// result document plus per-curve tables.

#include "refdiff/app/run_spec.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace refdiff::app {

inline constexpr int kSchemaVersion = 1;

struct RunOptions {
    double inject_alpha_offset = 0.0;  // negative control: shifts the analytic α seen by verify
};

struct Table {
    std::string file_name;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> data;  // one vector per column
};

struct VerifyCheck {
    std::string name;
    double analytic = 0.0;
    double estimate = 0.0;
    double statistic = 0.0;  // z-score, relative error or absolute gap; see name
    double threshold = 0.0;
    bool pass = false;
};

struct VerificationReport {
    std::vector<VerifyCheck> checks;
    bool pass() const;
};

struct ResultBundle {
    nlohmann::json document;
    std::vector<Table> tables;
    bool verification_failed = false;
};

ResultBundle run(const RunSpec& spec, const RunOptions& options = {});

/// Analytic values against Monte Carlo: α z-score (≤ 3), η² relative error
/// (≤ 0.15), batch-means η² z-score (≤ 3), occupation sup-gap against the
/// bin-averaged density (≤ 0.05) and, for two barriers, |CGF − ψ| (≤ 0.02)
/// at each of spec.cgf_thetas.
VerificationReport verify(const RunSpec& spec, const RunOptions& options = {});

nlohmann::json to_json(const VerificationReport& report);

/// result.json plus one CSV per table, each written to a temporary file and
/// renamed into place.
void write_bundle(const ResultBundle& bundle, const std::filesystem::path& out_dir);

void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace refdiff::app
