// Command-line front-end: admissibility checks, simulation runs and
// refinement studies driven by scenario config files.
//
// Exit codes: 0 success, 1 usage or config error, 2 inadmissible material,
// 3 solver failure.

#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "evosim/runner.hpp"

namespace {

void apply_thread_env() {
    if (const char *env = std::getenv("EVOSIM_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) evosim::sparse_thread_count() = n;
    }
}

void print_check(const evosim::CheckReport &rep) {
    std::cout << "nu = " << rep.nu << "\n";
    if (rep.has_elastic) std::cout << "eta_elastic = " << rep.eta_elastic << "\n";
    if (rep.has_em) std::cout << "eta_em = " << rep.eta_em << "\n";
    std::cout << "eta = " << rep.eta << "\n";
    std::cout << "admissible = " << (rep.admissible ? "yes" : "no") << "\n";
}

} // namespace

int main(int argc, char **argv) {
    apply_thread_env();

    CLI::App app{"Structure-preserving simulator for coupled electromagnetic-elastic transmission problems"};
    app.require_subcommand(1);

    std::string cfg_path;
    std::string out_dir;
    int levels = 3;
    bool temporal = false;

    CLI::App *check = app.add_subcommand("check", "Parse a scenario and report material admissibility");
    check->add_option("config", cfg_path, "scenario config file")->required();

    CLI::App *run = app.add_subcommand("run", "Run a scenario and write per-step CSV diagnostics");
    run->add_option("config", cfg_path, "scenario config file")->required();
    run->add_option("--out", out_dir, "output directory (overrides the config)");

    CLI::App *conv = app.add_subcommand("convergence", "Refinement study of the interface residuals");
    conv->add_option("config", cfg_path, "scenario config file")->required();
    conv->add_option("--levels", levels, "number of refinement levels")->required();
    conv->add_flag("--temporal", temporal, "fixed-grid temporal order study instead of space-time refinement");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        const evosim::ScenarioConfig cfg = evosim::load_config(cfg_path);
        if (check->parsed()) {
            const evosim::CheckReport rep = evosim::cmd_check(cfg);
            print_check(rep);
            return rep.admissible ? 0 : 2;
        }
        if (run->parsed()) {
            const evosim::RunReport rep = evosim::cmd_run(cfg, out_dir);
            print_check(rep.admissibility);
            std::cout << "run_csv = " << rep.run_csv << "\n";
            std::cout << "final_energy = " << rep.final_energy << "\n";
            std::cout << "max_causality_residual = " << rep.max_causality_residual << "\n";
            std::cout << "max_r_traction = " << rep.max_traction << "\n";
            std::cout << "max_r_tangential = " << rep.max_tangential << "\n";
            std::cout << "max_r_energy = " << rep.max_energy_residual_interface << "\n";
            std::cout << "max_r_nTn = " << rep.max_normal_traction << "\n";
            return 0;
        }
        if (conv->parsed()) {
            if (temporal) {
                const evosim::TemporalOrderTable table = evosim::cmd_temporal_order(cfg, levels);
                std::cout << "dt,error\n";
                for (const auto &row : table.rows) std::cout << row.dt << "," << row.error << "\n";
                std::cout << "orders:";
                for (double o : table.orders) std::cout << " " << o;
                std::cout << "\n";
            } else {
                const evosim::ConvergenceTable table = evosim::cmd_convergence(cfg, levels);
                std::cout << "level,h,dt,max_r_traction,max_r_tangential,max_r_energy,max_r_nTn\n";
                for (const auto &row : table.rows) {
                    std::cout << row.level << "," << row.h << "," << row.dt << ",";
                    if (row.truncated) {
                        std::cout << "truncated,truncated,truncated,truncated\n";
                    } else {
                        std::cout << row.max_traction << "," << row.max_tangential << "," << row.max_energy
                                  << "," << row.max_normal_traction << "\n";
                    }
                }
                auto print_orders = [](const char *name, const std::vector<double> &o) {
                    std::cout << name << ":";
                    for (double v : o) std::cout << " " << v;
                    std::cout << "\n";
                };
                print_orders("order_traction", table.order_traction);
                print_orders("order_tangential", table.order_tangential);
                print_orders("order_energy", table.order_energy);
                print_orders("order_nTn", table.order_normal_traction);
                if (table.truncated) std::cout << "note: study truncated by the resource cap\n";
            }
            return 0;
        }
    } catch (const evosim::ConfigError &e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const evosim::UsageError &e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const evosim::InadmissibleMaterialError &e) {
        std::cerr << "inadmissible material: " << e.what() << "\n";
        return 2;
    } catch (const evosim::SolverError &e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        if (!e.residual_history.empty()) {
            std::cerr << "residual history:";
            for (double r : e.residual_history) std::cerr << " " << r;
            std::cerr << "\n";
        }
        return 3;
    } catch (const evosim::Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
