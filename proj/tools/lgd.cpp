// Command-line front end: one subcommand per stage plus run-all. What each
// stage reads and writes lives in the pipeline header; this file is flag
// plumbing and exit codes (0 ok, 1 usage, 2 stage failure).

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lgd/pipeline.hpp"

namespace {

void print_timings(const lgd::RunManifest& m) {
    std::printf("stage,seconds\n");
    for (const char* stage : lgd::kStageOrder) {
        auto it = m.seconds.find(stage);
        if (it != m.seconds.end()) std::printf("%s,%.3f\n", stage, it->second);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"learning-guided search for unstable drone parameter ranges"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(lgd::kToolVersion));
    // long-form help only: train's window-length flag is --h
    app.set_help_flag("--help", "print help and exit");

    lgd::PipelineOptions po;
    lgd::GenlogsOptions go;
    lgd::TrainOptions to;
    lgd::SearchStageOptions so;
    lgd::ValidateOptions vo;
    lgd::GuidelineStageOptions guo;

    auto add_common = [&](CLI::App* c) {
        c->set_help_flag("--help", "print help and exit");
        c->add_option("--table", po.table_path,
                      "parameter table CSV (built-in table when omitted)");
        c->add_option("--mission", po.mission_path,
                      "mission script (built-in course when omitted)");
        c->add_option("--seed", po.seed, "run seed");
        c->add_option("--jobs", po.jobs, "worker threads for mission batches")
            ->check(CLI::PositiveNumber);
        c->add_option("--out-dir", po.out_dir, "run directory (LGD_OUT overrides)");
    };
    auto add_genlogs = [&](CLI::App* c) {
        c->add_option("--flights", go.flights, "missions to fly")->check(CLI::PositiveNumber);
    };
    auto add_train = [&](CLI::App* c) {
        c->add_option("--h", to.hp.h, "context window length")->check(CLI::PositiveNumber);
        c->add_option("--hidden", to.hp.hidden_size, "recurrent state width")
            ->check(CLI::PositiveNumber);
        c->add_option("--epochs", to.hp.epochs, "training epochs")->check(CLI::PositiveNumber);
        c->add_option("--lr", to.hp.learning_rate, "learning rate");
        c->add_option("--batch", to.hp.batch_size, "minibatch size")->check(CLI::PositiveNumber);
        c->add_option("--val-fraction", to.hp.validation_fraction,
                      "fraction of flights held out for early stopping");
    };
    auto add_search = [&](CLI::App* c) {
        c->add_option("--np", so.params.NP, "population size");
        c->add_option("--f", so.params.F, "mutation scaling factor");
        c->add_option("--cr", so.params.CR, "crossover rate");
        c->add_option("--gmax", so.params.G_max, "generation cap");
        c->add_option("--eps", so.params.stagnation_eps, "stagnation threshold on best fitness");
        c->add_option("--window", so.params.stagnation_window, "stagnation window, generations");
        c->add_option("--top-k", so.params.top_k, "survivors kept per segment");
        c->add_option("--m", so.params.m, "representatives per cluster");
        c->add_option("--bandwidth", so.bandwidth, "meanshift bandwidth (0: median heuristic)");
        c->add_option("--max-segments", so.max_segments, "segment cap before clustering")
            ->check(CLI::PositiveNumber);
    };
    auto add_validate = [&](CLI::App* c) {
        c->add_option("--inject-time", vo.injection_time,
                      "seconds into the flight for the mid-air parameter write");
    };
    auto add_guideline = [&](CLI::App* c) {
        c->add_option("--pop", guo.moea.population, "population size");
        c->add_option("--gens", guo.moea.generations, "generations");
        c->add_option("--grid-points", guo.moea.grid_points,
                      "restrict bound ends to an n-point grid (0: continuous)");
    };

    auto* genlogs = app.add_subcommand("genlogs", "fly the log campaign");
    add_common(genlogs);
    add_genlogs(genlogs);
    auto* train = app.add_subcommand("train", "fit the state predictor on the logs");
    add_common(train);
    add_train(train);
    auto* search = app.add_subcommand("search", "evolve configurations that upset the predictor");
    add_common(search);
    add_search(search);
    auto* validate = app.add_subcommand("validate", "re-fly the potential set and record verdicts");
    add_common(validate);
    add_validate(validate);
    auto* guideline =
        app.add_subcommand("guideline", "estimate safe-range guidelines from the verdicts");
    add_common(guideline);
    add_guideline(guideline);
    auto* report = app.add_subcommand("report", "tally verdicts and stage timings");
    add_common(report);
    auto* runall = app.add_subcommand("run-all", "all stages in order under one seed");
    add_common(runall);
    add_genlogs(runall);
    add_train(runall);
    add_search(runall);
    add_validate(runall);
    add_guideline(runall);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;  // --help and --version land here with rc 0
    }

    if (const char* env = std::getenv("LGD_OUT"); env && *env) po.out_dir = env;

    try {
        if (genlogs->parsed()) {
            lgd::run_genlogs(po, go);
        } else if (train->parsed()) {
            lgd::run_train(po, to);
        } else if (search->parsed()) {
            lgd::run_search_stage(po, so);
        } else if (validate->parsed()) {
            lgd::run_validate(po, vo);
        } else if (guideline->parsed()) {
            lgd::run_guideline(po, guo);
        } else if (report->parsed()) {
            std::fputs(lgd::run_report(po).c_str(), stdout);
            print_timings(lgd::load_manifest(po.out_dir));
        } else if (runall->parsed()) {
            std::fputs(lgd::run_all(po, {go, to, so, vo, guo}).c_str(), stdout);
            print_timings(lgd::load_manifest(po.out_dir));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
