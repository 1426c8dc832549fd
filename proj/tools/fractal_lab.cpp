// Batch experiment runner for the random-fractal projection laboratory.
//
// Subcommands mirror the experiment kinds; every run writes manifest.json,
// CSV reports and summary.txt into --out. Identical config and seeds
// reproduce byte-identical CSV bodies on any thread count.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "fractal/experiments.hpp"
#include "fractal/parallel.hpp"
#include "fractal/rational.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitGuard = 3;

void print_error(const std::string& category, const std::string& message) {
    nlohmann::json err;
    err["error"] = message;
    err["category"] = category;
    std::cerr << err.dump() << std::endl;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"fractal-lab: simulation lab for random Cantor sets, their projections "
                 "and random covering sets"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool relaxed = false;

    app.add_option("--config", config_path, "experiment config (JSON)");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--seed", seed, "override the manifest seed");
    app.add_option("--threads", threads, "worker threads (default: hardware)");
    app.add_flag("--relaxed", relaxed, "covering desk-scale mode (relaxed growth constants)");

    const char* kinds[] = {"cantor-sweep", "concentration-audit", "covering-extract", "aniso",
                           "lemma-suite"};
    for (const char* kind : kinds)
        app.add_subcommand(kind, std::string("run the ") + kind + " experiment");

    CLI11_PARSE(app, argc, argv);
    const std::string kind = app.get_subcommands().front()->get_name();

    try {
        std::string config_json;
        if (!config_path.empty()) {
            std::ifstream is(config_path);
            if (!is) {
                print_error("config", "cannot read config file: " + config_path);
                return kExitConfig;
            }
            std::stringstream ss;
            ss << is.rdbuf();
            config_json = ss.str();
        } else {
            config_json = "{}";
        }
        // the subcommand fixes the kind; a config kind, when present, must agree
        nlohmann::json cfg = nlohmann::json::parse(config_json, nullptr, false);
        if (cfg.is_discarded()) {
            print_error("config", "invalid JSON in " + config_path);
            return kExitConfig;
        }
        if (cfg.contains("kind") && cfg.at("kind").get<std::string>() != kind) {
            print_error("config", "config kind '" + cfg.at("kind").get<std::string>() +
                                      "' does not match subcommand '" + kind + "'");
            return kExitConfig;
        }
        cfg["kind"] = kind;

        const fractal::RunOutcome outcome =
            fractal::run_experiment(cfg.dump(), out_dir, seed, threads, relaxed);
        std::cout << outcome.summary;
        std::cout << (outcome.pass ? "RESULT PASS" : "RESULT FAIL") << std::endl;
        return outcome.pass ? 0 : 1;
    } catch (const fractal::config_error& e) {
        print_error("config", e.what());
        return kExitConfig;
    } catch (const fractal::guard_error& e) {
        print_error("guard", e.what());
        return kExitGuard;
    } catch (const std::exception& e) {
        print_error("runtime", e.what());
        return 1;
    }
}
