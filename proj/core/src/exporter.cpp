#include "bidgen/exporter.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "bidgen/errors.hpp"
#include "bidgen/util.hpp"

namespace bidgen {
namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot open '" + path + "' for writing");
  return out;
}

double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double idx = p * (v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(idx);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = idx - lo;
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

void write_svg_bands(const std::string& path, const std::vector<double>& p10,
                     const std::vector<double>& p50, const std::vector<double>& p90) {
  const int W = 640, H = 360, M = 40;
  const std::size_t T = p50.size();
  auto sx = [&](std::size_t t) {
    return M + static_cast<double>(t) / (T > 1 ? T - 1 : 1) * (W - 2 * M);
  };
  auto sy = [&](double v) { return H - M - v * (H - 2 * M); };
  auto polyline = [&](const std::vector<double>& v, const char* color, const char* dash) {
    std::string s = "<polyline fill=\"none\" stroke=\"";
    s += color;
    s += "\" stroke-width=\"1.5\"";
    if (dash[0]) s += std::string(" stroke-dasharray=\"") + dash + "\"";
    s += " points=\"";
    for (std::size_t t = 0; t < v.size(); ++t)
      s += format_double(sx(t)) + "," + format_double(sy(v[t])) + " ";
    s += "\"/>\n";
    return s;
  };

  auto out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << M << "\" y1=\"" << H - M << "\" x2=\"" << W - M << "\" y2=\""
      << H - M << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << M << "\" y1=\"" << M << "\" x2=\"" << M << "\" y2=\"" << H - M
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"" << H - 8
      << "\" font-size=\"12\" text-anchor=\"middle\">period</text>\n";
  out << "<text x=\"12\" y=\"" << H / 2
      << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 12 " << H / 2
      << ")\">remaining budget</text>\n";
  out << polyline(p10, "#9ecae1", "4,3");
  out << polyline(p50, "#3182bd", "");
  out << polyline(p90, "#9ecae1", "4,3");
  out << "</svg>\n";
}

}  // namespace

CurveExport export_curves(const std::vector<Trajectory>& episodes, const std::string& out_dir,
                          bool svg) {
  if (episodes.empty()) fail(Errc::invalid_argument, "export_curves: no episodes");
  std::filesystem::create_directories(out_dir);

  CurveExport result;
  const std::size_t T = episodes.front().steps.size();
  const std::size_t n_lambdas = episodes.front().steps.front().action.lambdas.size();

  // Long-format per-episode series.
  {
    const std::string path = out_dir + "/curves.csv";
    auto out = open_out(path);
    out << "episode,period,remaining_budget,cost,";
    for (std::size_t j = 0; j < n_lambdas; ++j) out << "lambda" << j << ",";
    out << "reward\n";
    for (std::size_t e = 0; e < episodes.size(); ++e) {
      for (std::size_t t = 0; t < episodes[e].steps.size(); ++t) {
        const auto& s = episodes[e].steps[t];
        out << e << ',' << t << ',' << format_double(s.state.remaining_budget) << ','
            << format_double(s.cost) << ',';
        for (std::size_t j = 0; j < n_lambdas; ++j)
          out << format_double(j < s.action.lambdas.size() ? s.action.lambdas[j] : 0.0) << ',';
        out << format_double(s.reward) << '\n';
      }
    }
    result.files.push_back(path);
  }

  // Percentile bands of the remaining-budget curve.
  std::vector<double> p10(T), p50(T), p90(T);
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> column;
    column.reserve(episodes.size());
    for (const auto& ep : episodes)
      if (t < ep.steps.size()) column.push_back(ep.steps[t].state.remaining_budget);
    p10[t] = percentile(column, 0.10);
    p50[t] = percentile(column, 0.50);
    p90[t] = percentile(column, 0.90);
  }
  {
    const std::string path = out_dir + "/bands.csv";
    auto out = open_out(path);
    out << "period,p10_remaining_budget,p50_remaining_budget,p90_remaining_budget\n";
    for (std::size_t t = 0; t < T; ++t)
      out << t << ',' << format_double(p10[t]) << ',' << format_double(p50[t]) << ','
          << format_double(p90[t]) << '\n';
    result.files.push_back(path);
  }

  int completed = 0;
  for (const auto& ep : episodes)
    if (ep.total_cost() >= 0.8 * ep.budget) ++completed;
  result.completion_fraction = static_cast<double>(completed) / episodes.size();
  {
    const std::string path = out_dir + "/summary.csv";
    auto out = open_out(path);
    out << "n_episodes,completion_fraction_80pct,mean_return,mean_cost\n";
    double ret = 0.0, cost = 0.0;
    for (const auto& ep : episodes) {
      ret += ep.total_return();
      cost += ep.total_cost();
    }
    out << episodes.size() << ',' << format_double(result.completion_fraction) << ','
        << format_double(ret / episodes.size()) << ',' << format_double(cost / episodes.size())
        << '\n';
    result.files.push_back(path);
  }

  if (svg) {
    const std::string path = out_dir + "/budget_bands.svg";
    write_svg_bands(path, p10, p50, p90);
    result.files.push_back(path);
  }
  return result;
}

void write_metrics_csv(const std::vector<BudgetMetrics>& rows, const std::string& path) {
  auto out = open_out(path);
  out << "budget,top_k_mean,mean,stddev,oracle_mean,oracle_ratio,n_failed\n";
  for (const auto& r : rows)
    out << format_double(r.budget) << ',' << format_double(r.top_k_mean) << ','
        << format_double(r.mean) << ',' << format_double(r.stddev) << ','
        << format_double(r.oracle_mean) << ',' << format_double(r.oracle_ratio) << ','
        << r.n_failed << '\n';
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  auto out = open_out(path);
  out << "axis,value,budget,top_k_mean,mean,stddev,oracle_ratio,failed,error\n";
  for (const auto& r : rows)
    out << r.axis << ',' << format_double(r.value) << ',' << format_double(r.budget) << ','
        << format_double(r.top_k_mean) << ',' << format_double(r.mean) << ','
        << format_double(r.stddev) << ',' << format_double(r.oracle_ratio) << ','
        << (r.failed ? 1 : 0) << ',' << r.error << '\n';
}

void write_oracle_csv(const std::vector<OracleRow>& rows, const std::string& path) {
  auto out = open_out(path);
  out << "seed,advertiser,oracle_value,oracle_cost,lambda_star\n";
  for (const auto& r : rows)
    out << r.seed << ',' << r.advertiser << ',' << format_double(r.oracle_value) << ','
        << format_double(r.oracle_cost) << ',' << format_double(r.lambda_star) << '\n';
}

}  // namespace bidgen
