// kwsolve: command-line front end for the prescribed Gauduchon curvature
// solver. Every run writes report.kv plus the fields and tables it produced
// into the output directory.

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "commands.hpp"

namespace {

int run(const std::string& name, const kwcli::RunConfig& cfg) {
    const auto& [fn, help] = kwcli::commands().at(name);
    kwcli::Output out(kwcli::output_dir(cfg.get("out")), cfg.flag("heatmap"));
    out.put("command", name);
    int code = kwcli::ok;
    std::string error;
    try {
        code = fn(cfg, out);
    } catch (const kw::SolverError& e) {
        code = kwcli::solver_failure;
        error = e.what();
    } catch (const kw::Error& e) {
        // Precondition, format, parse and evaluation errors.
        code = kwcli::precondition;
        error = e.what();
    } catch (const std::filesystem::filesystem_error& e) {
        code = kwcli::precondition;
        error = e.what();
    }
    if (!error.empty()) {
        out.put("error", error);
        std::cerr << "kwsolve " << name << ": error: " << error << '\n';
    }
    out.put("exit_code", code);
    out.write_report();
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical solver for prescribed Gauduchon scalar curvature on flat tori"};
    app.require_subcommand(1);

    std::map<std::string, std::optional<std::string>> flags;
    std::optional<std::string> config_path;
    std::string chosen;

    for (const auto& [name, entry] : kwcli::commands()) {
        CLI::App* sub = app.add_subcommand(name, entry.second);
        sub->add_option("--config", config_path, "key = value configuration file");
        for (const auto& key : kwcli::all_keys()) {
            sub->add_option("--" + key, flags[key], "overrides '" + key + "' from the config file");
        }
        sub->callback([&chosen, n = name] { chosen = n; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kwcli::precondition;
    }

    kwcli::RunConfig cfg;
    try {
        if (config_path) cfg.load_file(*config_path);
        for (const auto& [key, value] : flags) {
            if (value) cfg.set(key, *value);
        }
    } catch (const kw::Error& e) {
        std::cerr << "kwsolve " << chosen << ": error: " << e.what() << '\n';
        return kwcli::precondition;
    }
    return run(chosen, cfg);
}
