#pragma once
// CSV / SVG / JSON writers for experiment results. Every file carries the
// config hash so outputs can be traced back to the settings that made them.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include "saflab/experiments.hpp"

namespace saflab {

// "# config=<hash>", then "iter,<label>...", one row per decimated iteration,
// values printed with %.6g.
std::string traces_csv(std::span<const NmsdTrace> traces, std::uint64_t hash);
void write_traces_csv(const std::filesystem::path& path, std::span<const NmsdTrace> traces,
                      std::uint64_t hash);

std::string theory_rows_csv(std::span<const TheoryRow> rows, std::uint64_t hash);
void write_theory_rows_csv(const std::filesystem::path& path, std::span<const TheoryRow> rows,
                           std::uint64_t hash);

// Static line chart of NMSD (dB) against iteration.
std::string traces_svg(std::span<const NmsdTrace> traces, std::string_view title,
                       std::uint64_t hash);
void write_text(const std::filesystem::path& path, std::string_view text);

// Steady-state level, divergence count and adaptive-parameter ranges per trace.
nlohmann::json summary_json(std::span<const NmsdTrace> traces);

}  // namespace saflab
