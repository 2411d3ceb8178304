#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include <nlsip/experiment.hpp>

namespace {

struct Flags {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
};

void print_summary(const nlsip::RunReport& r) {
    for (const auto& c : r.checks) {
        std::cout << (c.pass ? "PASS " : "FAIL ");
        if (c.criterion > 0) std::cout << "[" << c.criterion << "] ";
        std::cout << c.name << "  " << c.measured.dump() << '\n';
    }
    if (!r.error.empty()) std::cout << "ERROR " << r.error << '\n';
    for (const auto& a : r.artifacts) std::cout << "wrote " << a << '\n';
    std::cout << r.experiment << ": " << (r.passed() ? "pass" : "fail") << " (" << r.wall_seconds << " s)\n";
}

int execute(const std::string& tag, const Flags& f) {
    auto doc = nlsip::load_json(f.config);
    if (!doc.is_object()) nlsip::fail(nlsip::errc::config, f.config + ": expected a JSON object");
    if (!doc.contains("experiment")) doc["experiment"] = tag;
    if (doc["experiment"] != tag)
        nlsip::fail(nlsip::errc::config, "experiment: config is for '" + doc["experiment"].dump() +
                                             "', not the '" + tag + "' subcommand");
    if (f.out) doc["out"] = *f.out;
    if (f.seed) doc["seed"] = *f.seed;
    if (f.threads) doc["threads"] = *f.threads;
    const auto report = nlsip::run(nlsip::parse_config(doc));
    print_summary(report);
    return report.passed() ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mass-critical NLS with inverse-square potential: experiments and checks"};
    app.require_subcommand(1);
    Flags flags;
    std::string chosen;
    for (const auto& tag : nlsip::experiment_tags()) {
        auto* sub = app.add_subcommand(tag, "run the " + tag + " experiment");
        sub->add_option("--config", flags.config, "JSON config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", flags.out, "output directory for artifacts and report.json");
        sub->add_option("--seed", flags.seed, "seed for randomized suites");
        sub->add_option("--threads", flags.threads, "worker threads")->check(CLI::NonNegativeNumber);
        sub->callback([&chosen, tag] { chosen = tag; });
    }
    CLI11_PARSE(app, argc, argv);
    try {
        return execute(chosen, flags);
    } catch (const nlsip::error& e) {
        std::cerr << e.what() << '\n';
        return 2;
    }
}
