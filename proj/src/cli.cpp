#include "gridcoord/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "gridcoord/case_io.hpp"
#include "gridcoord/coordination.hpp"
#include "gridcoord/error.hpp"
#include "gridcoord/output.hpp"
#include "json.hpp"

namespace gridcoord::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string case_arg;
  std::string out_dir = ".";
  std::string format = "csv";
  std::optional<double> step;
  std::string curve_path;
  std::optional<double> tol;
};

io::Format format_of(const Common& c) {
  return c.format == "json" ? io::Format::Json : io::Format::Csv;
}

Scenario load(const Common& c) {
  Scenario sc = io::parse_case(io::resolve_case(c.case_arg));
  if (c.step) {
    sc.sweep_step = *c.step;
    if (auto v = validate(sc); !v.empty()) {
      throw ModelError("--step: " + v.front().message);
    }
  }
  return sc;
}

fs::path out_dir(const Common& c) {
  fs::path dir(c.out_dir);
  fs::create_directories(dir);
  return dir;
}

// Sweep grid merged with the exact breakpoints, in increasing q.
io::Table bid_curve_table(const dso::BidCurve& curve) {
  std::vector<double> qs;
  for (const auto& s : curve.samples) qs.push_back(s.q);
  for (const auto& b : curve.breakpoints()) qs.push_back(b.q);
  std::sort(qs.begin(), qs.end());
  qs.erase(std::unique(qs.begin(), qs.end(),
                       [](double a, double b) { return std::abs(a - b) <= 1e-9; }),
           qs.end());
  io::Table t{{"q_mw", "total_cost", "marginal_price"}, {}};
  for (const double q : qs) t.rows.push_back({q, curve.cost_at(q), curve.marginal_at(q)});
  return t;
}

io::Table breakpoints_table(const dso::BidCurve& curve) {
  io::Table t{{"q_mw", "total_cost", "marginal_price"}, {}};
  for (const auto& b : curve.breakpoints()) {
    t.rows.push_back({b.q, b.total_cost, curve.marginal_at(b.q)});
  }
  return t;
}

io::Table marginal_table(const dso::BidCurve& curve) {
  io::Table t{{"q_lo_mw", "q_hi_mw", "price"}, {}};
  for (const auto& s : dso::marginal_curve(curve)) t.rows.push_back({s.q_lo, s.q_hi, s.price});
  return t;
}

io::Table iso_table(const iso::IsoOutcome& o) {
  io::Table t{{"participant", "cleared_mw"}, {}};
  for (const auto& p : o.participants) t.rows.push_back({p.id, p.cleared});
  for (std::size_t d = 0; d < o.dso.size(); ++d) {
    t.rows.push_back({o.dso.size() == 1 ? std::string("DSO") : "DSO" + std::to_string(d + 1),
                      o.dso[d].q});
  }
  return t;
}

io::Table dispatch_table(const dso::DsoDispatch& d) {
  io::Table t{{"aggregator", "mw"}, {}};
  for (const auto& a : d.aggregators) t.rows.push_back({a.id, a.mw});
  return t;
}

io::Table retail_table(const dso::DsoDispatch& d) {
  io::Table t{{"node", "price"}, {}};
  for (std::size_t n = 0; n < d.retail_prices.size(); ++n) {
    t.rows.push_back({std::to_string(n), d.retail_prices[n]});
  }
  return t;
}

void write_curve(const fs::path& dir, const dso::BidCurve& curve, io::Format f) {
  io::write_table(dir, "bid_curve", bid_curve_table(curve), f);
  io::write_table(dir, "breakpoints", breakpoints_table(curve), f);
  io::write_table(dir, "marginal_curve", marginal_table(curve), f);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io::CaseError(io::CaseError::Kind::Io, path.string(), "cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Accepts the bid_curve or breakpoints output of dso-bid, in either format.
dso::BidCurve read_curve(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<dso::Breakpoint> pts;
  if (path.extension() == ".json") {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
      for (const auto& row : doc) {
        pts.push_back({row.at("q_mw").get<double>(), row.at("total_cost").get<double>()});
      }
    } catch (const nlohmann::json::exception& e) {
      throw io::CaseError(io::CaseError::Kind::Schema, path.string(), e.what());
    }
  } else {
    io::Table t;
    try {
      t = io::read_numeric_csv(text);
    } catch (const std::runtime_error& e) {
      throw io::CaseError(io::CaseError::Kind::Syntax, path.string(), e.what());
    }
    const auto col = [&](const std::string& name) {
      const auto it = std::find(t.columns.begin(), t.columns.end(), name);
      if (it == t.columns.end()) {
        throw io::CaseError(io::CaseError::Kind::Schema, path.string(), "missing column " + name);
      }
      return static_cast<std::size_t>(it - t.columns.begin());
    };
    const auto qc = col("q_mw");
    const auto cc = col("total_cost");
    for (const auto& row : t.rows) {
      pts.push_back({std::get<double>(row[qc]), std::get<double>(row[cc])});
    }
  }
  if (pts.empty()) throw io::CaseError(io::CaseError::Kind::Schema, path.string(), "empty curve");
  return dso::BidCurve::from_samples(std::move(pts), 1e-4);
}

nlohmann::json report_json(const coord::EquivalenceReport& rep, const Scenario& sc) {
  nlohmann::json q = nlohmann::json::array();
  for (const auto& c : rep.quantities) {
    q.push_back({{"id", c.id},
                 {"ideal", c.ideal},
                 {"coordinated", c.coordinated},
                 {"ideal_range", {c.face_lo, c.face_hi}},
                 {"deviation", c.deviation}});
  }
  return {{"pass", rep.pass},
          {"tolerance", rep.tolerance},
          {"objective_ideal", rep.objective_ideal},
          {"objective_coordinated", rep.objective_coordinated},
          {"max_deviation", rep.max_deviation},
          {"sweep_step", sc.sweep_step},
          {"breakpoint_refinement", true},
          {"quantities", q}};
}

int cmd_dso_bid(const Common& c, std::ostream& out) {
  const auto sc = load(c);
  const auto curve = dso::build_bid_curve(sc);
  const auto dir = out_dir(c);
  write_curve(dir, curve, format_of(c));
  out << "range_mw " << io::format_number(curve.q_min()) << " "
      << io::format_number(curve.q_max()) << "\n";
  out << "segments " << curve.segments().size() << "\n";
  return kOk;
}

int cmd_iso_clear(const Common& c, std::ostream& out) {
  const auto sc = load(c);
  const auto curve = read_curve(c.curve_path);
  const auto outcome = iso::clear(sc.wholesale, {curve}, sc.firm_wholesale_load, sc.tolerance);
  io::write_table(out_dir(c), "iso_outcome", iso_table(outcome), format_of(c));
  out << "clearing_price " << io::format_number(outcome.clearing_price) << "\n";
  return kOk;
}

int cmd_coordinate(const Common& c, std::ostream& out) {
  const auto sc = load(c);
  const auto res = coord::run_coordinated(sc);
  const auto dir = out_dir(c);
  const auto f = format_of(c);
  write_curve(dir, res.bid_curve, f);
  io::write_table(dir, "iso_outcome", iso_table(res.iso), f);
  io::write_table(dir, "dso_dispatch", dispatch_table(res.dso_dispatch), f);
  io::write_table(dir, "retail_prices", retail_table(res.dso_dispatch), f);
  out << "dso_award_mw " << io::format_number(res.iso.dso.front().q) << "\n";
  out << "clearing_price " << io::format_number(res.iso.clearing_price) << "\n";
  out << "total_cost " << io::format_number(res.total_cost()) << "\n";
  return kOk;
}

int cmd_ideal(const Common& c, std::ostream& out) {
  const auto sc = load(c);
  const auto res = coord::run_ideal(sc);
  io::Table t{{"participant", "cleared_mw"}, {}};
  for (const auto& p : res.iso.participants) t.rows.push_back({p.id, p.cleared});
  for (const auto& a : res.aggregators.aggregators) t.rows.push_back({a.id, a.mw});
  t.rows.push_back({std::string("DSO"), res.iso.dso.front().q});
  io::write_table(out_dir(c), "ideal_outcome", t, format_of(c));
  out << "clearing_price " << io::format_number(res.iso.clearing_price) << "\n";
  out << "total_cost " << io::format_number(res.iso.objective) << "\n";
  return kOk;
}

int cmd_verify(const Common& c, std::ostream& out) {
  const auto sc = load(c);
  double tol = 1e-6;
  if (std::getenv("GRIDCOORD_TOL")) tol = io::default_tolerance();
  if (c.tol) tol = *c.tol;
  const auto rep = coord::check_equivalence(sc, tol);
  io::write_text(out_dir(c) / "equivalence_report.json", report_json(rep, sc).dump(2) + "\n");
  out << (rep.pass ? "PASS" : "FAIL") << " max_deviation " << rep.max_deviation
      << " tolerance " << tol << "\n";
  return rep.pass ? kOk : kVerificationFailed;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"ISO/DSO market coordination over a radial distribution network", "gridcoord"};
  app.require_subcommand(1);
  Common c;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--case", c.case_arg, "Case file, or a bundled case name")->required();
    sub->add_option("--out", c.out_dir, "Output directory");
    sub->add_option("--format", c.format, "Tabular output format")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--step", c.step, "Sweep step in MW")->check(CLI::PositiveNumber);
    return sub;
  };
  auto* dso_bid = add_common(app.add_subcommand("dso-bid", "Build the DSO bid curve"));
  auto* iso_clear = add_common(app.add_subcommand("iso-clear", "Clear the wholesale market"));
  iso_clear->add_option("--curve", c.curve_path, "bid_curve file written by dso-bid")
      ->required();
  auto* coordinate = add_common(app.add_subcommand("coordinate", "Run the full pipeline"));
  auto* ideal = add_common(app.add_subcommand("ideal", "Joint dispatch with direct DER access"));
  auto* verify = add_common(app.add_subcommand("verify", "Compare coordinated and ideal"));
  verify->add_option("--tol", c.tol, "Equivalence tolerance")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*dso_bid) return cmd_dso_bid(c, out);
    if (*iso_clear) return cmd_iso_clear(c, out);
    if (*coordinate) return cmd_coordinate(c, out);
    if (*ideal) return cmd_ideal(c, out);
    if (*verify) return cmd_verify(c, out);
  } catch (const io::CaseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InfeasibleError& e) {
    err << "infeasible: " << e.what() << "\n";
    return kInfeasible;
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const ModelError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace gridcoord::cli
