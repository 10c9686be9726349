#include "asyncdiff/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "asyncdiff/errors.hpp"

namespace asyncdiff {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open output file: " + path);
    return out;
}

std::string format_db(double lin) {
    if (lin <= 0.0) return "-inf";
    return format_g17(10.0 * std::log10(lin));
}

}  // namespace

std::string format_g17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::vector<AggregateRow> aggregate_trajectory(const Trajectory& traj) {
    std::map<long, std::vector<double>> by_iter;
    for (const auto& r : traj.records)
        by_iter[r.iter].push_back(r.msd > 0.0 ? 10.0 * std::log10(r.msd)
                                              : -std::numeric_limits<double>::infinity());
    std::vector<AggregateRow> agg;
    agg.reserve(by_iter.size());
    for (const auto& [iter, vals] : by_iter) {
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= static_cast<double>(vals.size());
        double var = 0.0;
        for (double v : vals) var += (v - mean) * (v - mean);
        var = vals.size() > 1 ? var / static_cast<double>(vals.size() - 1) : 0.0;
        agg.push_back({iter, mean, std::sqrt(var)});
    }
    return agg;
}

void write_csv(const std::string& path, const Trajectory& traj,
               const std::vector<AggregateRow>& agg, std::optional<double> msd_db_theory) {
    std::ofstream out = open_out(path);
    out << "# digest=" << traj.config_digest << "\n";
    out << "run,iter,msd_lin,msd_db\n";
    for (const auto& r : traj.records)
        out << r.run << ',' << r.iter << ',' << format_g17(r.msd) << ',' << format_db(r.msd)
            << "\n";
    out << "# aggregate\n";
    out << "iter,msd_db_mean,msd_db_std";
    if (msd_db_theory) out << ",msd_db_theory";
    out << "\n";
    for (const auto& a : agg) {
        out << a.iter << ',' << format_g17(a.msd_db_mean) << ',' << format_g17(a.msd_db_std);
        if (msd_db_theory) out << ',' << format_g17(*msd_db_theory);
        out << "\n";
    }
}

void write_report(const std::string& path, const TheoryOutput& rep) {
    std::ofstream out = open_out(path);
    out << "# digest=" << rep.digest << "\n";
    out << "msd_lin=" << format_g17(rep.msd.msd_lin) << "\n";
    out << "msd_db="
        << (std::isfinite(rep.msd.msd_db) ? format_g17(rep.msd.msd_db) : std::string("-inf"))
        << "\n";
    out << "gamma=" << format_g17(rep.stability.gamma) << "\n";
    out << "mu_max=" << format_g17(rep.stability.mu_max) << "\n";
    out << "admissible=" << (rep.stability.admissible ? "true" : "false") << "\n";
    out << "rho=" << format_g17(rep.msd.rho) << "\n";
    out << "alpha0=" << format_g17(rep.msd.alpha0) << "\n";
    out << "K=" << rep.K << "\n";
    out << "M=" << rep.M << "\n";
    out << "T=" << rep.T << "\n";
    out << "mode=" << rep.mode << "\n";
    out << "exact=" << (rep.exact ? "true" : "false") << "\n";
    if (!rep.exact) out << "max_standard_error=" << format_g17(rep.max_standard_error) << "\n";
}

std::uint64_t read_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::string line;
    std::getline(in, line);
    const std::string prefix = "# digest=";
    if (line.rfind(prefix, 0) != 0) throw ConfigError("no digest header in " + path);
    return std::stoull(line.substr(prefix.size()));
}

void write_svg(const std::string& path, const std::vector<AggregateRow>& agg,
               std::optional<double> msd_db_theory, std::uint64_t digest) {
    if (agg.empty()) throw ConfigError("nothing to plot");
    const double W = 760, H = 480;
    const double ml = 70, mr = 20, mt = 30, mb = 55;

    double xmin = static_cast<double>(agg.front().iter), xmax = static_cast<double>(agg.back().iter);
    if (xmax <= xmin) xmax = xmin + 1;
    double ymin = 1e300, ymax = -1e300;
    for (const auto& a : agg)
        if (std::isfinite(a.msd_db_mean)) {
            ymin = std::min(ymin, a.msd_db_mean);
            ymax = std::max(ymax, a.msd_db_mean);
        }
    const bool theory_finite = msd_db_theory && std::isfinite(*msd_db_theory);
    if (theory_finite) {
        ymin = std::min(ymin, *msd_db_theory);
        ymax = std::max(ymax, *msd_db_theory);
    }
    if (ymin > ymax) {  // fully noiseless curve
        ymin = -1;
        ymax = 1;
    }
    const double pad = std::max(1.0, 0.05 * (ymax - ymin));
    ymin -= pad;
    ymax += pad;

    const auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
    const auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
    s << "<!-- digest=" << digest << " -->\n";
    s << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
    // axes
    s << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\""
      << H - mb << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
      << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 5.0;
        const double yv = ymin + (ymax - ymin) * i / 5.0;
        s << "<line x1=\"" << px(xv) << "\" y1=\"" << H - mb << "\" x2=\"" << px(xv) << "\" y2=\""
          << H - mb + 5 << "\" stroke=\"black\"/>\n";
        s << "<text x=\"" << px(xv) << "\" y=\"" << H - mb + 20
          << "\" font-size=\"11\" text-anchor=\"middle\">" << static_cast<long>(xv)
          << "</text>\n";
        s << "<line x1=\"" << ml - 5 << "\" y1=\"" << py(yv) << "\" x2=\"" << ml << "\" y2=\""
          << py(yv) << "\" stroke=\"black\"/>\n";
        char yb[32];
        std::snprintf(yb, sizeof yb, "%.1f", yv);
        s << "<text x=\"" << ml - 8 << "\" y=\"" << py(yv) + 4
          << "\" font-size=\"11\" text-anchor=\"end\">" << yb << "</text>\n";
    }
    s << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 15
      << "\" font-size=\"13\" text-anchor=\"middle\">iteration</text>\n";
    s << "<text x=\"18\" y=\"" << (mt + H - mb) / 2
      << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << (mt + H - mb) / 2 << ")\">MSD (dB)</text>\n";

    // empirical mean curve; -inf points are skipped (segments break)
    s << "<polyline fill=\"none\" stroke=\"#1f62a8\" stroke-width=\"1.5\" points=\"";
    bool any = false;
    for (const auto& a : agg) {
        if (!std::isfinite(a.msd_db_mean)) continue;
        s << px(static_cast<double>(a.iter)) << ',' << py(a.msd_db_mean) << ' ';
        any = true;
    }
    s << "\"/>\n";
    if (!any)
        s << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << (mt + H - mb) / 2
          << "\" font-size=\"12\" text-anchor=\"middle\">empirical MSD is exactly zero "
             "(noiseless)</text>\n";

    if (theory_finite) {
        s << "<line x1=\"" << ml << "\" y1=\"" << py(*msd_db_theory) << "\" x2=\"" << W - mr
          << "\" y2=\"" << py(*msd_db_theory)
          << "\" stroke=\"#c0392b\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>\n";
    } else if (msd_db_theory) {
        s << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << mt + 14
          << "\" font-size=\"12\" text-anchor=\"middle\" fill=\"#c0392b\">theory MSD = 0 "
             "(-inf dB), line suppressed</text>\n";
    }

    // legend
    s << "<rect x=\"" << W - mr - 190 << "\" y=\"" << mt + 6
      << "\" width=\"180\" height=\"42\" fill=\"white\" stroke=\"#999\"/>\n";
    s << "<line x1=\"" << W - mr - 180 << "\" y1=\"" << mt + 20 << "\" x2=\"" << W - mr - 150
      << "\" y2=\"" << mt + 20 << "\" stroke=\"#1f62a8\" stroke-width=\"1.5\"/>\n";
    s << "<text x=\"" << W - mr - 144 << "\" y=\"" << mt + 24
      << "\" font-size=\"11\">simulation (mean)</text>\n";
    s << "<line x1=\"" << W - mr - 180 << "\" y1=\"" << mt + 38 << "\" x2=\"" << W - mr - 150
      << "\" y2=\"" << mt + 38
      << "\" stroke=\"#c0392b\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"/>\n";
    s << "<text x=\"" << W - mr - 144 << "\" y=\"" << mt + 42
      << "\" font-size=\"11\">theory</text>\n";
    s << "</svg>\n";

    open_out(path) << s.str();
}

}  // namespace asyncdiff
