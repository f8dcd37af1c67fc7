#pragma once

// Minimal SVG charts built from a results directory's CSV files.

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "rommeo/harness/runner.hpp"

namespace rommeo::harness {

struct Table {
   std::vector< std::string > columns;
   std::vector< std::vector< double > > rows;

   [[nodiscard]] std::vector< double > column(const std::string& name) const
   {
      auto it = std::find(columns.begin(), columns.end(), name);
      require(it != columns.end(), "no column '" + name + "'");
      auto c = std::size_t(it - columns.begin());
      std::vector< double > out;
      for(const auto& r : rows) {
         out.push_back(r[c]);
      }
      return out;
   }
   [[nodiscard]] bool has(const std::string& name) const
   {
      return std::find(columns.begin(), columns.end(), name) != columns.end();
   }
};

inline Table read_csv(const fs::path& file)
{
   std::ifstream in(file);
   if(! in) {
      throw std::runtime_error("cannot read " + file.string());
   }
   Table t;
   std::string line;
   bool header = true;
   while(std::getline(in, line)) {
      if(line.empty()) {
         continue;
      }
      std::stringstream ss(line);
      std::string cell;
      std::vector< double > row;
      while(std::getline(ss, cell, ',')) {
         if(header) {
            t.columns.push_back(cell);
         } else {
            row.push_back(std::stod(cell));
         }
      }
      if(! header) {
         if(row.size() != t.columns.size()) {
            throw std::runtime_error(file.string() + ": row width differs from header");
         }
         t.rows.push_back(std::move(row));
      }
      header = false;
   }
   return t;
}

/// Trial tables of a results directory, ordered by trial index.
inline std::vector< Table > read_trials(const fs::path& dir)
{
   std::map< std::size_t, fs::path > files;
   for(const auto& entry : fs::directory_iterator(dir)) {
      auto name = entry.path().filename().string();
      if(name.rfind("trial_", 0) == 0 && entry.path().extension() == ".csv") {
         files[std::stoul(name.substr(6))] = entry.path();
      }
   }
   std::vector< Table > out;
   for(const auto& [k, p] : files) {
      out.push_back(read_csv(p));
   }
   return out;
}

struct Series {
   std::string label;
   std::vector< double > x;
   std::vector< double > y;
   std::string color = "#1f77b4";
   bool points = false;
};

inline std::string svg_chart(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                             const std::vector< Series >& series)
{
   constexpr double W = 640, H = 420, L = 64, R = 16, T = 36, B = 48;
   double x0 = std::numeric_limits< double >::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
   for(const auto& s : series) {
      for(std::size_t k = 0; k < s.x.size(); ++k) {
         x0 = std::min(x0, s.x[k]);
         x1 = std::max(x1, s.x[k]);
         y0 = std::min(y0, s.y[k]);
         y1 = std::max(y1, s.y[k]);
      }
   }
   if(! std::isfinite(x0)) {
      x0 = 0, x1 = 1, y0 = 0, y1 = 1;
   }
   if(x1 == x0) {
      x1 = x0 + 1;
   }
   if(y1 == y0) {
      y1 = y0 + 1;
   }
   auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
   auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
   std::ostringstream os;
   os << std::setprecision(5);
   os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
   os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
   os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
   os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
   os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
   for(int k = 0; k <= 4; ++k) {
      double xv = x0 + (x1 - x0) * k / 4.0;
      double yv = y0 + (y1 - y0) * k / 4.0;
      os << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << xv << "</text>\n";
      os << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << yv << "</text>\n";
   }
   os << "<text x=\"" << W / 2 << "\" y=\"" << H - 10 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
   os << "<text x=\"14\" y=\"" << H / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << H / 2 << ")\">"
      << ylabel << "</text>\n";
   double ly = T + 4;
   for(const auto& s : series) {
      if(s.points) {
         for(std::size_t k = 0; k < s.x.size(); ++k) {
            os << "<circle cx=\"" << px(s.x[k]) << "\" cy=\"" << py(s.y[k]) << "\" r=\"1.5\" fill=\"" << s.color
               << "\" fill-opacity=\"0.5\"/>\n";
         }
      } else {
         os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
         for(std::size_t k = 0; k < s.x.size(); ++k) {
            os << px(s.x[k]) << "," << py(s.y[k]) << " ";
         }
         os << "\"/>\n";
      }
      if(! s.label.empty()) {
         os << "<rect x=\"" << W - R - 150 << "\" y=\"" << ly - 9 << "\" width=\"10\" height=\"10\" fill=\"" << s.color
            << "\"/>\n";
         os << "<text x=\"" << W - R - 134 << "\" y=\"" << ly << "\">" << s.label << "</text>\n";
         ly += 16;
      }
   }
   os << "</svg>\n";
   return os.str();
}

namespace detail {

inline std::vector< double > mean_over_trials(const std::vector< Table >& trials, const std::string& col)
{
   std::vector< double > m;
   for(const auto& t : trials) {
      auto c = t.column(col);
      if(m.empty()) {
         m.assign(c.size(), 0.0);
      }
      for(std::size_t k = 0; k < std::min(m.size(), c.size()); ++k) {
         m[k] += c[k] / double(trials.size());
      }
   }
   return m;
}

inline std::vector< double > iota_like(std::size_t n)
{
   std::vector< double > x(n);
   for(std::size_t k = 0; k < n; ++k) {
      x[k] = double(k);
   }
   return x;
}

inline void write_file(const fs::path& p, const std::string& s)
{
   std::ofstream out(p);
   if(! out) {
      throw std::runtime_error("cannot write " + p.string());
   }
   out << s;
}

/// Column named prefix + anything, e.g. "rho1_" -> "rho1_A".
inline std::string column_with_prefix(const Table& t, const std::string& prefix)
{
   for(const auto& c : t.columns) {
      if(c.rfind(prefix, 0) == 0) {
         return c;
      }
   }
   throw std::runtime_error("no column starting with '" + prefix + "'");
}

}  // namespace detail

/// Writes SVG charts next to the CSVs in `dir`; returns the files written.
inline std::vector< fs::path > plot_results(const fs::path& dir)
{
   auto trials = read_trials(dir);
   if(trials.empty()) {
      throw std::runtime_error("no trial_<k>.csv files in " + dir.string());
   }
   double threshold = 0.9;
   if(fs::exists(dir / "summary.json")) {
      std::ifstream in(dir / "summary.json");
      json s = json::parse(in);
      if(s.contains("config") && s["config"].contains("convergence")
         && s["config"]["convergence"].contains("joint_prob")) {
         threshold = s["config"]["convergence"]["joint_prob"];
      }
   }
   std::vector< fs::path > written;
   auto emit = [&](const std::string& name, const std::string& svg) {
      detail::write_file(dir / name, svg);
      written.push_back(dir / name);
   };
   auto reward = detail::mean_over_trials(trials, "mean_reward");
   auto x = detail::iota_like(reward.size());
   emit("learning_curve.svg", svg_chart("Mean reward over trials", "episode", "reward", {{"mean reward", x, reward}}));

   const Table& t0 = trials.front();
   if(t0.has("pi1_mean")) {
      emit("policy_means.svg",
           svg_chart("Policy and opponent-model means", "episode", "action",
                     {{"pi1", x, detail::mean_over_trials(trials, "pi1_mean"), "#1f77b4"},
                      {"pi2", x, detail::mean_over_trials(trials, "pi2_mean"), "#ff7f0e"},
                      {"rho1", x, detail::mean_over_trials(trials, "rho1_mean"), "#2ca02c"},
                      {"rho2", x, detail::mean_over_trials(trials, "rho2_mean"), "#d62728"}}));
      Series sc{"", {}, {}, "#1f77b4", true};
      for(const auto& t : trials) {
         auto a = t.column("action1_mean");
         auto b = t.column("action2_mean");
         sc.x.insert(sc.x.end(), a.begin(), a.end());
         sc.y.insert(sc.y.end(), b.begin(), b.end());
      }
      emit("action_scatter.svg", svg_chart("Episode mean actions", "agent 1", "agent 2", {sc}));
   } else {
      std::string pi1 = detail::column_with_prefix(t0, "pi1_");
      std::string pi2 = detail::column_with_prefix(t0, "pi2_");
      std::string rho1 = detail::column_with_prefix(t0, "rho1_");
      std::vector< double > conv(x.size(), 0.0);
      for(const auto& t : trials) {
         auto a = t.column(pi1);
         auto b = t.column(pi2);
         for(std::size_t k = 0; k < conv.size() && k < a.size(); ++k) {
            conv[k] += (a[k] * b[k] >= threshold) / double(trials.size());
         }
      }
      emit("convergence.svg",
           svg_chart("Fraction of trials at the optimal joint action", "episode", "fraction", {{"", x, conv}}));
      emit("model_vs_policy.svg",
           svg_chart("Agent 1 opponent model vs agent 2 policy", "episode", "probability",
                     {{rho1, x, detail::mean_over_trials(trials, rho1), "#2ca02c"},
                      {pi2, x, detail::mean_over_trials(trials, pi2), "#ff7f0e"}}));
   }
   return written;
}

}  // namespace rommeo::harness
