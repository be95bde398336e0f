#include <CLI11.hpp>

#include <iostream>

#include "dideal/scenario.hpp"

using namespace dideal;

namespace {

int list_blocks(int dim)
{
    json out = json::array();
    for (auto b : {BlockName::TotallyGeodesicLegendreSphere, BlockName::TotallyGeodesicLegendreHyperbolic,
                   BlockName::FlatLagrangianSubspace, BlockName::MinimalLagrangianTorus}) {
        json e;
        e["name"] = to_string(b);
        e["ambient"] = to_string(block_ambient(b));
        e["dim"] = dim;
        try {
            const BuildingBlock blk = builtin_block(b, dim);
            e["certified_minimal"] = blk.certified_minimal;
            e["certified_minimal_ideal"] = blk.certified_minimal_ideal;
            e["max_H2"] = blk.certification.max_H2;
            e["max_lagrangian"] = blk.certification.max_lagrangian;
        } catch (const std::exception& ex) {
            e["error"] = ex.what();
        }
        out.push_back(e);
    }
    std::cout << out.dump(2) << "\n";
    return ExitPass;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"delta(2,n-2)-ideal Lagrangian submanifolds: construct, verify, certify, classify"};
    app.require_subcommand(1);
    std::string config, out = ".", formats = "json,csv,plotdata";
    std::uint64_t seed = 0;
    int block_dim = 3;

    std::vector<std::pair<CLI::App*, Command>> runners;
    for (auto [name, cmd, help] : {std::tuple{"construct", Command::Construct, "build the family and write plot data"},
                                   std::tuple{"verify", Command::Verify, "structural residuals at sample points"},
                                   std::tuple{"delta", Command::Delta, "delta(2,n-2) certification at sample points"},
                                   std::tuple{"classify", Command::Classify, "certification plus case classification"},
                                   std::tuple{"run", Command::Run, "every check enabled in the scenario"}}) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "scenario JSON")->required();
        sub->add_option("--out", out, "output directory");
        sub->add_option("--seed", seed, "override samples.seed");
        sub->add_option("--format", formats, "comma list of json,csv,plotdata");
        runners.emplace_back(sub, cmd);
    }
    CLI::App* blocks = app.add_subcommand("blocks", "building-block catalog");
    blocks->require_subcommand(1);
    CLI::App* blist = blocks->add_subcommand("list", "list blocks with their certification");
    blist->add_option("--dim", block_dim, "block dimension");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? ExitPass : ExitUsage;
    }

    try {
        if (blist->parsed()) return list_blocks(block_dim);
        for (auto& [sub, cmd] : runners) {
            if (!sub->parsed()) continue;
            const std::set<std::string> fmt = parse_formats(formats);
            const Scenario sc = load_scenario(config);
            std::optional<std::uint64_t> so;
            if (sub->count("--seed")) so = seed;
            const Report rep = run_scenario(sc, cmd, so);
            emit_outputs(rep, out, fmt);
            for (const auto& c : rep.checks)
                std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " value=" << c.value << " tol=" << c.tolerance << "\n";
            if (!rep.error.empty()) std::cerr << "error: " << rep.error << "\n";
            std::cout << (rep.pass ? "PASS" : "FAIL") << " " << sc.name << " (" << rep.points.size() << " points)\n";
            return rep.exit_code;
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return ExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return ExitNumerical;
    }
    return ExitUsage;
}
