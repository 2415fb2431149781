#include "gossipq/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

namespace gq {

using nlohmann::json;

void write_trials_csv(std::ostream& out, const std::vector<SeriesRecord>& runs) {
  out << "algorithm,trial,activation,mae,mae_std\n";
  for (const auto& r : runs)
    for (const auto& c : r.series.checkpoints)
      out << r.label << ',' << r.trial << ',' << c.activations << ',' << format_number(c.mae_mean) << ','
          << format_number(c.mae_std) << '\n';
}

void write_aggregate_csv(std::ostream& out, const std::vector<MetricSeries>& aggregates) {
  out << "algorithm,activation,mean,std,diverged\n";
  for (const auto& s : aggregates)
    for (const auto& c : s.checkpoints)
      out << s.label << ',' << c.activations << ',' << format_number(c.mae_mean) << ',' << format_number(c.mae_std)
          << ',' << (s.diverged ? 1 : 0) << '\n';
}

void write_table_csv(std::ostream& out, const Table& table) {
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(table.header);
  for (const auto& row : table.rows) line(row);
}

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

void write_svg(std::ostream& out, const std::vector<MetricSeries>& series, const std::string& title) {
  constexpr double W = 720, H = 440, L = 70, R = 180, T = 40, B = 50;
  double x_max = 1, y_lo = std::numeric_limits<double>::infinity(), y_hi = 0;
  bool positive = true;
  for (const auto& s : series)
    for (const auto& c : s.checkpoints) {
      if (!std::isfinite(c.mae_mean)) continue;
      x_max = std::max(x_max, static_cast<double>(c.activations));
      y_lo = std::min(y_lo, c.mae_mean - c.mae_std);
      y_hi = std::max(y_hi, c.mae_mean + c.mae_std);
      positive = positive && c.mae_mean > 0;
    }
  if (!std::isfinite(y_lo)) y_lo = 0, y_hi = 1;
  const bool log_y = positive && y_hi > 0;
  double lo_min = std::numeric_limits<double>::infinity();
  if (log_y)
    for (const auto& s : series)
      for (const auto& c : s.checkpoints)
        if (std::isfinite(c.mae_mean)) lo_min = std::min(lo_min, c.mae_mean);
  auto ty = [&](double v) {
    double a, b, u;
    if (log_y) {
      a = std::log10(lo_min), b = std::log10(y_hi), u = std::log10(std::max(v, lo_min));
    } else {
      a = std::min(0.0, y_lo), b = y_hi, u = v;
    }
    if (b <= a) b = a + 1;
    return T + (H - T - B) * (1 - std::clamp((u - a) / (b - a), 0.0, 1.0));
  };
  auto tx = [&](double v) { return L + (W - L - R) * v / x_max; };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << L << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << (W - R) << "\" y=\"" << H - 15 << "\" font-family=\"sans-serif\" font-size=\"11\" "
      << "text-anchor=\"end\">activations (max " << format_number(x_max) << ")</text>\n";
  out << "<text x=\"10\" y=\"" << T - 8 << "\" font-family=\"sans-serif\" font-size=\"11\">MAE"
      << (log_y ? " (log)" : "") << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % std::size(kPalette)];
    std::string upper, lower, mean;
    for (const auto& c : s.checkpoints) {
      if (!std::isfinite(c.mae_mean)) break;
      const std::string x = fmt(tx(static_cast<double>(c.activations)));
      upper += x + "," + fmt(ty(c.mae_mean + c.mae_std)) + " ";
      mean += x + "," + fmt(ty(c.mae_mean)) + " ";
      lower.insert(0, x + "," + fmt(ty(c.mae_mean - c.mae_std)) + " ");
    }
    out << "<polygon points=\"" << upper << lower << "\" fill=\"" << color << "\" fill-opacity=\"0.15\"/>\n";
    out << "<polyline points=\"" << mean << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"/>\n";
    const double ly = T + 18.0 * static_cast<double>(si);
    out << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << W - R + 35 << "\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"11\">"
        << s.label << "</text>\n";
  }
  out << "</svg>\n";
}

void write_result(const ExperimentResult& result, const std::filesystem::path& dir, bool svg) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw InvalidArgument("cannot write " + (dir / name).string());
    return f;
  };
  if (!result.runs.empty()) {
    auto f = open("trials.csv");
    write_trials_csv(f, result.runs);
    auto a = open("aggregate.csv");
    write_aggregate_csv(a, result.aggregates);
  }
  for (const auto& t : result.tables) {
    auto f = open(t.name + ".csv");
    write_table_csv(f, t);
  }
  {
    auto f = open("meta.json");
    f << result.meta.dump(2) << '\n';
  }
  if (svg && !result.aggregates.empty()) {
    auto f = open("plot.svg");
    write_svg(f, result.aggregates, result.config.command);
  }
}

// ---------------------------------------------------------------------------

json graph_to_json(const Graph& g) {
  json edges = json::array();
  for (const auto& e : g.edges()) edges.push_back({e.i, e.j});
  json j = {{"n", g.num_nodes()}, {"edges", edges}};
  if (g.positions()) {
    json pos = json::array();
    const auto& p = *g.positions();
    for (Index k = 0; k < p.rows(); ++k) pos.push_back({p(k, 0), p(k, 1)});
    j["positions"] = pos;
  }
  if (g.radius()) j["radius"] = *g.radius();
  return j;
}

Graph graph_from_json(const json& j) {
  const Index n = j.at("n").get<Index>();
  std::vector<Edge> edges;
  for (const auto& e : j.at("edges")) {
    require(e.is_array() && e.size() == 2, "edge must be a pair");
    edges.push_back({e[0].get<Index>(), e[1].get<Index>()});
  }
  std::optional<Eigen::MatrixX2d> positions;
  if (j.contains("positions")) {
    const auto& p = j.at("positions");
    require(static_cast<Index>(p.size()) == n, "positions must have n rows");
    Eigen::MatrixX2d m(n, 2);
    for (Index k = 0; k < n; ++k) m.row(k) << p[static_cast<std::size_t>(k)][0].get<double>(),
                                  p[static_cast<std::size_t>(k)][1].get<double>();
    positions = m;
  }
  std::optional<double> radius;
  if (j.contains("radius")) radius = j.at("radius").get<double>();
  return Graph(n, std::move(edges), positions, radius);
}

namespace {

template <typename Derived>
json matrix_json(const Eigen::DenseBase<Derived>& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(static_cast<double>(m(r, c)));
    rows.push_back(row);
  }
  return rows;
}

NodeMatrix matrix_from(const json& j) {
  const auto rows = static_cast<Index>(j.size());
  const auto cols = rows ? static_cast<Index>(j[0].size()) : 0;
  NodeMatrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    require(static_cast<Index>(j[static_cast<std::size_t>(r)].size()) == cols, "ragged matrix");
    for (Index c = 0; c < cols; ++c) m(r, c) = j[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

template <typename Derived>
json vector_json(const Eigen::DenseBase<Derived>& v) {
  json out = json::array();
  for (Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

}  // namespace

json state_to_json(const AsylState& s) { return {{"x", matrix_json(s.x)}, {"mu_hat", matrix_json(s.mu_hat)}}; }

AsylState asyl_state_from_json(const json& j) {
  AsylState s;
  s.x = matrix_from(j.at("x"));
  s.mu_hat = matrix_from(j.at("mu_hat"));
  require(s.x.rows() == s.mu_hat.rows() && s.x.cols() == s.mu_hat.cols(), "x and mu_hat shapes differ");
  return s;
}

json state_to_json(const GoRankState& s) {
  return {{"data", vector_json(s.data)},
          {"aux", vector_json(s.aux)},
          {"rprime", vector_json(s.rprime)},
          {"counter", vector_json(s.counter)},
          {"rounds", s.rounds}};
}

json state_to_json(const TrimAverager& s) {
  return {{"values", matrix_json(s.values)},
          {"sums", matrix_json(s.sums)},
          {"mass", vector_json(s.mass)},
          {"weight", vector_json(s.weight)}};
}

json state_to_json(const GoDepthState& s) {
  return {{"data", matrix_json(s.data)},
          {"aux", matrix_json(s.aux)},
          {"mean_distance", vector_json(s.mean_distance)},
          {"counter", vector_json(s.counter)},
          {"depth", vector_json(s.depth)}};
}

}  // namespace gq
