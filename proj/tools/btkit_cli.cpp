// Command-line surface for the btkit toolkit: data validation, synthetic
// league generation, model fitting and the four forecasting experiments.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "btkit/btkit.hpp"

namespace fs = std::filesystem;

namespace {

std::vector<int> parse_seasons(const std::string& text) {
  std::vector<int> seasons;
  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    seasons.push_back(std::stoi(current));
    current.clear();
  };
  for (char c : text) {
    if (c == ',') {
      flush();
    } else {
      current.push_back(c);
    }
  }
  flush();
  std::sort(seasons.begin(), seasons.end());
  return seasons;
}

// All contiguous windows of `width` seasons present in the dataset. The
// window after the last season has no test season; "all" is one train-only
// window over every season.
std::vector<btkit::WindowSpec> sweep_windows(const std::vector<int>& seasons,
                                             const std::string& width,
                                             btkit::Encoding encoding,
                                             bool need_test) {
  std::vector<btkit::WindowSpec> windows;
  std::set<int> present(seasons.begin(), seasons.end());
  if (width == "all") {
    btkit::WindowSpec w;
    w.train_seasons = seasons;
    w.encoding = encoding;
    if (!need_test) windows.push_back(std::move(w));
    return windows;
  }
  const int n = std::stoi(width);
  for (int start : seasons) {
    btkit::WindowSpec w;
    bool complete = true;
    for (int s = start; s < start + n; ++s) {
      if (!present.count(s)) {
        complete = false;
        break;
      }
      w.train_seasons.push_back(s);
    }
    if (!complete) continue;
    if (present.count(start + n)) w.test_season = start + n;
    if (need_test && !w.test_season) continue;
    w.encoding = encoding;
    windows.push_back(std::move(w));
  }
  return windows;
}

void print_fit(const btkit::FitResult& fit) {
  std::printf("%-28s %10s %10s %8s %10s\n", "term", "coef", "se", "z", "p");
  for (std::size_t j = 0; j < fit.columns.size(); ++j) {
    const double se = j < fit.se.size() ? fit.se[j] : 0.0;
    if (std::isfinite(se) && se > 0.0) {
      const auto ws = btkit::wald_stat(fit.beta[j], se);
      std::printf("%-28s %10.4f %10.4f %8.3f %10.5f%s\n", fit.columns[j].c_str(),
                  fit.beta[j], se, ws.z, ws.p, ws.p < 0.05 ? " *" : "");
    } else {
      std::printf("%-28s %10.4f %10s %8s %10s\n", fit.columns[j].c_str(),
                  fit.beta[j], "-", "-", "-");
    }
  }
  if (fit.reference_team) {
    std::printf("reference team: %s (0.00)\n", fit.reference_team->c_str());
  }
  std::printf("loglik %.4f  aic %.2f  iterations %d  converged %s%s\n",
              fit.log_lik, fit.aic, fit.iterations,
              fit.converged ? "yes" : "no",
              fit.separation ? "  [separation]" : "");
}

void write_fit_json(const btkit::FitResult& fit, const fs::path& out_dir,
                    const std::string& name) {
  fs::create_directories(out_dir / "fits");
  std::ofstream out(out_dir / "fits" / (name + ".json"), std::ios::binary);
  out << btkit::fit_to_json(fit).dump(2) << '\n';
}

void write_reports(const std::vector<btkit::ExperimentReport>& reports,
                   const fs::path& out_dir, const std::string& stem,
                   const std::string& format) {
  fs::create_directories(out_dir);
  if (format == "json") {
    btkit::write_report_json(reports, out_dir / (stem + ".json"));
  } else {
    btkit::write_report_csv(reports, out_dir / (stem + ".csv"));
  }
}

void print_report_line(const btkit::ExperimentReport& r) {
  std::printf("%s %-9s train %s", r.experiment.c_str(), r.model.c_str(),
              r.window_label().c_str());
  if (std::isfinite(r.train_aic)) std::printf("  aic %.2f", r.train_aic);
  if (r.train_accuracy.total) {
    std::printf("  train-acc %.2f%%", 100.0 * r.train_accuracy.rate());
  }
  if (r.test_season) {
    std::printf("  test %d", *r.test_season);
    if (r.test_accuracy.total) {
      std::printf("  test-acc %.2f%% (%d/%d)  finals %d/%d",
                  100.0 * r.test_accuracy.rate(), r.test_accuracy.correct,
                  r.test_accuracy.total, r.finals_correct, r.finals_total);
    }
  }
  std::printf("\n");
}

struct Options {
  std::string data;
  std::string out;
  std::string train;
  std::string window = "1";
  std::string encoding = "last4";
  std::string strategy;
  std::string format = "csv";
  bool home_effect = false;
  bool interactions = false;
  std::uint64_t seed = 1;
};

int run_experiment(const btkit::Dataset& dataset, const std::string& id,
                   const Options& opt) {
  const btkit::Encoding encoding = btkit::parse_encoding(opt.encoding);
  const auto seasons = btkit::seasons_in(dataset);

  std::vector<btkit::WindowSpec> windows;
  if (!opt.train.empty()) {
    btkit::WindowSpec w;
    w.train_seasons = parse_seasons(opt.train);
    w.encoding = encoding;
    std::set<int> present(seasons.begin(), seasons.end());
    if (present.count(w.train_seasons.back() + 1)) {
      w.test_season = w.train_seasons.back() + 1;
    }
    windows.push_back(std::move(w));
  } else {
    windows = sweep_windows(seasons, opt.window, encoding, id == "e4");
  }
  for (auto& w : windows) w.include_interactions = opt.interactions;
  if (windows.empty()) {
    std::cerr << "no usable windows for " << id << "\n";
    return 1;
  }

  std::vector<btkit::ExperimentReport> all;
  for (const auto& window : windows) {
    std::vector<btkit::ExperimentReport> reports;
    if (id == "e1" || id == "e2") {
      reports.push_back(btkit::run_outcome_experiment(dataset, window, id == "e2"));
    } else if (id == "e3") {
      reports.push_back(btkit::run_covariate_experiment(dataset, window));
    } else {
      if (!window.test_season) continue;
      reports = btkit::run_strategy_experiment(dataset, window);
      if (!opt.strategy.empty()) {
        const std::string wanted = opt.strategy == "full" ? "ts_tv" : opt.strategy;
        std::erase_if(reports, [&](const btkit::ExperimentReport& r) {
          return r.model != wanted;
        });
      }
    }
    for (const auto& r : reports) print_report_line(r);
    if (!opt.out.empty()) {
      write_reports(reports, opt.out, "report_" + id + "_" + window.label(),
                    opt.format);
      for (const auto& r : reports) {
        if (r.fit) {
          std::string name = "fit_" + id + "_" + r.model + "_" + window.label();
          if (!r.encoding.empty()) name += "_" + r.encoding;
          write_fit_json(*r.fit, opt.out, name);
        }
        if (!r.test_outcomes.empty()) {
          fs::create_directories(fs::path(opt.out) / "predictions");
          btkit::write_predictions_csv(
              r.test_outcomes,
              fs::path(opt.out) / "predictions" /
                  ("predictions_" + id + "_" + r.model + "_" + window.label() +
                   (r.encoding.empty() ? "" : "_" + r.encoding) + ".csv"));
        }
      }
    }
    all.insert(all.end(), reports.begin(), reports.end());
  }
  if (!opt.out.empty() && windows.size() > 1) {
    write_reports(all, opt.out, "report_" + id + "_sweep", opt.format);
  }
  return 0;
}

int dispatch(const std::string& command, const std::string& experiment_id,
             const Options& opt) {
  if (command == "synth") {
    btkit::SynthSpec spec;
    spec.first_season = 2020;
    spec.num_seasons = 4;
    spec.seed = opt.seed;
    btkit::Dataset d = btkit::generate_games(spec);
    btkit::save_dataset(d, opt.out);
    std::printf("wrote %zu games (%d draws) across %zu seasons to %s\n",
                d.games.size(), btkit::draw_count(d),
                btkit::seasons_in(d).size(), opt.out.c_str());
    return 0;
  }

  btkit::Dataset dataset = btkit::load_dataset_dir(opt.data);

  if (command == "validate") {
    const auto seasons = btkit::seasons_in(dataset);
    std::printf("ok: %zu games, %d draws, %zu decided\n", dataset.games.size(),
                btkit::draw_count(dataset), btkit::decided_games(dataset).size());
    for (int s : seasons) {
      const auto games = btkit::window_games(dataset, std::vector<int>{s});
      std::printf("  season %d: %zu decided games\n", s, games.size());
    }
    return 0;
  }

  if (command == "fit" || command == "predict") {
    btkit::WindowSpec window;
    window.train_seasons = parse_seasons(opt.train);
    const auto seasons = btkit::seasons_in(dataset);
    std::set<int> present(seasons.begin(), seasons.end());
    if (present.count(window.train_seasons.back() + 1)) {
      window.test_season = window.train_seasons.back() + 1;
    }
    btkit::ExperimentReport report =
        btkit::run_outcome_experiment(dataset, window, opt.home_effect);
    if (command == "fit") {
      print_fit(*report.fit);
    } else {
      print_report_line(report);
    }
    if (!opt.out.empty()) {
      write_fit_json(*report.fit, opt.out,
                     "fit_" + report.model + "_" + window.label());
      if (command == "predict" && !report.test_outcomes.empty()) {
        fs::create_directories(opt.out);
        btkit::write_predictions_csv(report.test_outcomes,
                                     fs::path(opt.out) /
                                         ("predictions_" + window.label() + ".csv"));
        const btkit::MetricsReport metrics =
            btkit::metrics_report(report.test_outcomes, dataset);
        std::ofstream mout(fs::path(opt.out) / ("metrics_" + window.label() + ".json"),
                           std::ios::binary);
        mout << btkit::metrics_to_json(metrics).dump(2) << '\n';
      }
    }
    return 0;
  }

  if (command == "experiment") {
    return run_experiment(dataset, experiment_id, opt);
  }

  if (command == "report") {
    Options sweep = opt;
    std::vector<btkit::ExperimentReport> all;
    for (const std::string width : {"1", "2", "3", "4", "all"}) {
      for (const std::string id : {"e1", "e2"}) {
        Options o = sweep;
        o.window = width;
        o.out.clear();
        const auto windows = sweep_windows(btkit::seasons_in(dataset), width,
                                           btkit::Encoding::kLast4, false);
        for (const auto& w : windows) {
          all.push_back(btkit::run_outcome_experiment(dataset, w, id == "e2"));
        }
      }
    }
    for (const std::string width : {"1", "2", "all"}) {
      for (const std::string enc : {"last4", "season"}) {
        const auto windows = sweep_windows(btkit::seasons_in(dataset), width,
                                           btkit::parse_encoding(enc), false);
        for (const auto& w : windows) {
          all.push_back(btkit::run_covariate_experiment(dataset, w));
        }
      }
    }
    for (const std::string enc : {"last4", "season"}) {
      const auto windows = sweep_windows(btkit::seasons_in(dataset), "1",
                                         btkit::parse_encoding(enc), true);
      for (const auto& w : windows) {
        auto reports = btkit::run_strategy_experiment(dataset, w);
        all.insert(all.end(), reports.begin(), reports.end());
      }
    }
    for (const auto& r : all) print_report_line(r);
    if (!opt.out.empty()) write_reports(all, opt.out, "report_all", opt.format);
    return 0;
  }

  std::cerr << "unknown command: " << command << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bradley-Terry match forecasting toolkit"};
  app.require_subcommand(1);

  Options opt;
  std::string experiment_id;

  auto add_common = [&](CLI::App* cmd, bool needs_data) {
    auto* data = cmd->add_option("--data", opt.data, "input CSV directory");
    if (needs_data) data->required();
    cmd->add_option("--out", opt.out, "output directory");
    cmd->add_option("--format", opt.format, "report format")
        ->check(CLI::IsMember({"csv", "json"}));
    return cmd;
  };

  auto* validate = add_common(app.add_subcommand("validate", "load and check a dataset"), true);
  (void)validate;

  auto* synth = app.add_subcommand("synth", "generate a synthetic league");
  synth->add_option("--out", opt.out, "output directory")->required();
  synth->add_option("--seed", opt.seed, "RNG seed");

  auto* fit = add_common(app.add_subcommand("fit", "fit a strength model on a window"), true);
  fit->add_option("--train", opt.train, "train seasons, comma separated")->required();
  fit->add_flag("--home-effect", opt.home_effect, "include the AT_HOME order effect");

  auto* predict = add_common(
      app.add_subcommand("predict", "fit on a window and predict the next season"), true);
  predict->add_option("--train", opt.train, "train seasons, comma separated")->required();
  predict->add_flag("--home-effect", opt.home_effect, "include the AT_HOME order effect");

  auto* experiment = add_common(
      app.add_subcommand("experiment", "run one of the four experiments"), true);
  experiment->add_option("id", experiment_id, "experiment id")
      ->required()
      ->check(CLI::IsMember({"e1", "e2", "e3", "e4"}));
  experiment->add_option("--train", opt.train, "explicit train seasons");
  experiment->add_option("--window", opt.window, "window width (1..4 or 'all')")
      ->check(CLI::IsMember({"1", "2", "3", "4", "all"}));
  experiment->add_option("--encoding", opt.encoding, "PI encoding")
      ->check(CLI::IsMember({"last4", "season"}));
  experiment->add_option("--strategy", opt.strategy, "experiment 4 strategy")
      ->check(CLI::IsMember({"full", "addition", "substitution", "incremental", "majority"}));
  experiment->add_flag("--interactions", opt.interactions,
                       "add AT_HOME interaction columns to the candidate pool");

  auto* report = add_common(
      app.add_subcommand("report", "full experiment sweep over the dataset"), true);
  (void)report;

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 1;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return dispatch(command, experiment_id, opt);
  } catch (const btkit::SingularInformation& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const btkit::NonFinite& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const btkit::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
