#include "saflab/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "saflab/errors.hpp"

namespace saflab {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string traces_csv(std::span<const NmsdTrace> traces, std::uint64_t hash) {
  std::string s = "# config=" + hash_hex(hash) + "\niter";
  std::size_t rows = 0;
  for (const auto& t : traces) {
    s += "," + t.label;
    rows = std::max(rows, t.db.size());
  }
  s += '\n';
  for (std::size_t i = 0; i < rows; ++i) {
    s += std::to_string(i);
    for (const auto& t : traces) {
      s += ',';
      if (i < t.db.size()) s += fmt(t.db[i]);
    }
    s += '\n';
  }
  return s;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

void write_traces_csv(const std::filesystem::path& path, std::span<const NmsdTrace> traces,
                      std::uint64_t hash) {
  write_text(path, traces_csv(traces, hash));
}

std::string theory_rows_csv(std::span<const TheoryRow> rows, std::uint64_t hash) {
  std::string s = "# config=" + hash_hex(hash) +
                  "\nstep,noise_var,stable,predicted_db,simulated_db,gap_db\n";
  for (const auto& r : rows) {
    s += fmt(r.step) + ',' + fmt(r.noise_var) + ',' + (r.stable ? "1" : "0");
    if (r.stable)
      s += ',' + fmt(r.predicted_db) + ',' + fmt(r.simulated_db) + ',' + fmt(r.gap_db);
    else
      s += ",,,";
    s += '\n';
  }
  return s;
}

void write_theory_rows_csv(const std::filesystem::path& path, std::span<const TheoryRow> rows,
                           std::uint64_t hash) {
  write_text(path, theory_rows_csv(rows, hash));
}

std::string traces_svg(std::span<const NmsdTrace> traces, std::string_view title,
                       std::uint64_t hash) {
  constexpr double W = 800, H = 480, left = 70, right = 170, top = 40, bottom = 50;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                 "#9467bd", "#8c564b", "#e377c2", "#17becf"};
  std::size_t n = 0;
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto& t : traces) {
    n = std::max(n, t.db.size());
    for (double v : t.db) {
      if (!std::isfinite(v)) continue;
      lo = any ? std::min(lo, v) : v;
      hi = any ? std::max(hi, v) : v;
      any = true;
    }
  }
  lo = std::floor(lo / 10.0) * 10.0;
  hi = std::ceil(hi / 10.0) * 10.0;
  if (hi <= lo) hi = lo + 10.0;
  const double pw = W - left - right, ph = H - top - bottom;
  auto xpos = [&](double i) { return left + pw * (n > 1 ? i / double(n - 1) : 0.0); };
  auto ypos = [&](double v) { return top + ph * (hi - v) / (hi - lo); };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"480\" "
       "font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<!-- config=" + hash_hex(hash) + " -->\n";
  s += "<rect width=\"800\" height=\"480\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt(left) + "\" y=\"24\" font-size=\"15\">" + std::string(title) +
       "</text>\n";
  const double step = (hi - lo) > 100 ? 20.0 : 10.0;
  for (double v = lo; v <= hi + 1e-9; v += step) {
    const auto y = fmt(ypos(v));
    s += "<line x1=\"" + fmt(left) + "\" x2=\"" + fmt(left + pw) + "\" y1=\"" + y + "\" y2=\"" +
         y + "\" stroke=\"#ddd\"/>\n";
    s += "<text x=\"" + fmt(left - 8) + "\" y=\"" + y +
         "\" text-anchor=\"end\" dominant-baseline=\"middle\">" + fmt(v) + "</text>\n";
  }
  for (int k = 0; k <= 5; ++k) {
    const double i = (n > 1 ? double(n - 1) : 0.0) * k / 5.0;
    s += "<text x=\"" + fmt(xpos(i)) + "\" y=\"" + fmt(top + ph + 18) +
         "\" text-anchor=\"middle\">" + fmt(std::round(i)) + "</text>\n";
  }
  s += "<rect x=\"" + fmt(left) + "\" y=\"" + fmt(top) + "\" width=\"" + fmt(pw) +
       "\" height=\"" + fmt(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<text x=\"" + fmt(left + pw / 2) + "\" y=\"" + fmt(H - 10) +
       "\" text-anchor=\"middle\">iteration</text>\n";
  s += "<text transform=\"translate(18," + fmt(top + ph / 2) +
       ") rotate(-90)\" text-anchor=\"middle\">NMSD (dB)</text>\n";

  // Thin long traces to about 1000 points.
  const std::size_t stride = std::max<std::size_t>(1, n / 1000);
  for (std::size_t k = 0; k < traces.size(); ++k) {
    const auto& t = traces[k];
    const char* color = colors[k % 8];
    s += "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" + std::string(color) +
         "\" points=\"";
    for (std::size_t i = 0; i < t.db.size(); i += stride) {
      if (!std::isfinite(t.db[i])) continue;
      s += fmt(xpos(double(i))) + ',' + fmt(ypos(t.db[i])) + ' ';
    }
    s += "\"/>\n";
    const double ly = top + 16 + 18.0 * k;
    s += "<line x1=\"" + fmt(left + pw + 12) + "\" x2=\"" + fmt(left + pw + 36) + "\" y1=\"" +
         fmt(ly) + "\" y2=\"" + fmt(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + fmt(left + pw + 42) + "\" y=\"" + fmt(ly) +
         "\" dominant-baseline=\"middle\">" + t.label + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

nlohmann::json summary_json(std::span<const NmsdTrace> traces) {
  auto arr = nlohmann::json::array();
  for (const auto& t : traces) {
    nlohmann::json j = {{"label", t.label},
                        {"trials", t.trials},
                        {"diverged_trials", t.diverged},
                        {"steady_state_db", t.steady_state_db()},
                        {"final_db", t.db.empty() ? 0.0 : t.db.back()}};
    if (t.lambda_min) j["lambda_range"] = {*t.lambda_min, *t.lambda_max};
    if (t.mu_vss_min) j["mu_vss_range"] = {*t.mu_vss_min, *t.mu_vss_max};
    arr.push_back(j);
  }
  return arr;
}

}  // namespace saflab
