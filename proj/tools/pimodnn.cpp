#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pimodnn/cli/commands.hpp"

namespace cli = pimodnn::cli;

int main(int argc, char** argv) {
  CLI::App app{"PI-ModNN zone thermal modeling and control toolkit"};
  app.require_subcommand(1);
  std::string config_path, run_dir, variant = "PI-ModNN", model_path, agent_path, ablation_path, report_path, kind;
  std::vector<std::string> sets;
  app.add_option("-c,--config", config_path, "JSON config file (defaults are used when omitted)");
  app.add_option("--set", sets, "override, section.key=value (repeatable)");
  app.add_option("--run-dir", run_dir, "output directory (default: <io.out_dir>/<command>-<timestamp>)");
  int jobs = 0;

  auto* gen = app.add_subcommand("gen-data", "simulate the plant and write telemetry CSV");
  auto* train = app.add_subcommand("train", "train one model variant");
  train->add_option("--variant", variant, "LSTM, PI-ModNN|LC, PI-ModNN|L, PI-ModNN|C or PI-ModNN");
  auto* eval = app.add_subcommand("eval", "rolling 96-step MAE over the test month");
  auto* trv = app.add_subcommand("trv", "temperature response violation over the test month");
  auto* ablate = app.add_subcommand("ablate", "variant x data size x seed grid with rule importance");
  ablate->add_option("--jobs", jobs, "worker threads (overrides evaluation.jobs)");
  auto* gate = app.add_subcommand("gate", "four-step model gate");
  gate->add_option("--ablation", ablation_path, "ablation.json for rule-importance figures in step 3");
  for (auto* s : {eval, trv, gate}) s->add_option("-m,--model", model_path, "model checkpoint")->required();
  auto* tagent = app.add_subcommand("train-agent", "train a SAC agent inside the model environment");
  tagent->add_option("-m,--model", model_path, "environment model checkpoint")->required();
  auto* eagent = app.add_subcommand("eval-agent", "agent vs rule-based baseline on the plant");
  eagent->add_option("-a,--agent", agent_path, "agent checkpoint")->required();
  auto* plot = app.add_subcommand("plot", "render a report as SVG plus CSV");
  plot->add_option("report", report_path, "report JSON")->required();
  plot->add_option("kind", kind, "mae-vs-days, trv-vs-days, ri, loss-decay or day-trace")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kInputError;
  }

  try {
    if (plot->parsed()) {
      const std::filesystem::path out =
          run_dir.empty() ? std::filesystem::path(report_path).parent_path() / "plots" : std::filesystem::path(run_dir);
      return cli::cmd_plot(report_path, kind, out, &std::cout);
    }
    cli::RunContext ctx;
    ctx.cfg = cli::apply_overrides(config_path.empty() ? cli::default_config() : cli::load_config(config_path), sets);
    if (jobs > 0) ctx.cfg.eval.jobs = jobs;
    ctx.out = &std::cout;
    const std::string name = app.get_subcommands().front()->get_name();
    ctx.dir = run_dir.empty() ? cli::timestamped_run_dir(ctx.cfg.io.out_dir, name) : std::filesystem::path(run_dir);
    if (gen->parsed()) return cli::cmd_gen_data(ctx);
    if (train->parsed()) return cli::cmd_train(ctx, variant);
    if (eval->parsed()) return cli::cmd_eval(ctx, model_path);
    if (trv->parsed()) return cli::cmd_trv(ctx, model_path);
    if (ablate->parsed()) return cli::cmd_ablate(ctx);
    if (gate->parsed()) return cli::cmd_gate(ctx, model_path, ablation_path);
    if (tagent->parsed()) return cli::cmd_train_agent(ctx, model_path);
    if (eagent->parsed()) return cli::cmd_eval_agent(ctx, agent_path);
  } catch (const pimodnn::NumericalDivergence& e) {
    std::cerr << "numerical divergence: " << e.what() << '\n';
    return cli::kDivergence;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return cli::kInputError;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return cli::kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return cli::kInputError;
}
