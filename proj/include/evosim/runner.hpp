#pragma once

// Batch front-end behind the command-line tool: scenario construction from
// a config, the admissibility check, the simulation run with CSV (and
// optional legacy VTK) output, and the refinement study. All outputs are
// deterministic for a fixed configuration: fixed iteration orders, fixed
// "%.17g" number formatting, no timestamps.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "evosim/config.hpp"
#include "evosim/coupling.hpp"
#include "evosim/evolution.hpp"

namespace evosim {

inline const char *kRunCsvHeader =
    "t,energy,dissipation,work,energy_residual,causality_residual,"
    "max_r_traction,max_r_tangential,max_r_energy,max_r_nTn";

struct Scenario {
    StaggeredGrid grid;
    DomainPartition partition;
    CoupledSystem system;
    ForcingFn forcing;
    TimeGrid time;
    Scheme scheme = Scheme::CrankNicolson;
    ScenarioConfig config;
};

inline StaggeredGrid build_grid(const ScenarioConfig &c) {
    return StaggeredGrid(c.cells, c.spacing, Vec3{{c.origin[0], c.origin[1], c.origin[2]}});
}

inline DomainPartition build_partition(const ScenarioConfig &c, const StaggeredGrid &g) {
    CellMask omega0 = empty_mask(g);
    CellMask omega1 = empty_mask(g);
    if (!c.raster_file.empty()) {
        std::ifstream in(c.raster_file, std::ios::binary);
        if (!in) throw ConfigError("partition.raster: cannot open '" + c.raster_file + "'");
        std::vector<char> bytes(static_cast<std::size_t>(g.cell_count()));
        in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
            throw ConfigError("partition.raster: file shorter than cell count");
        for (std::size_t i = 0; i < bytes.size(); ++i) {
            if (bytes[i] == 1) omega0[i] = 1;
            else if (bytes[i] == 2) omega1[i] = 1;
            else if (bytes[i] != 0) throw ConfigError("partition.raster: cell bytes must be 0, 1 or 2");
        }
    } else {
        mask_add_box(omega0, g, {c.omega0[0], c.omega0[1], c.omega0[2]}, {c.omega0[3], c.omega0[4], c.omega0[5]});
        mask_add_box(omega1, g, {c.omega1[0], c.omega1[1], c.omega1[2]}, {c.omega1[3], c.omega1[4], c.omega1[5]});
    }
    return DomainPartition(g, std::move(omega0), std::move(omega1));
}

inline Scheme scheme_of(const ScenarioConfig &c) {
    return c.scheme == "implicit_euler" ? Scheme::ImplicitEuler : Scheme::CrankNicolson;
}

/// Smooth pulse: Gaussian in space on one component of the shared unknown,
/// sin^2 window in time. Identically zero before the onset.
inline ForcingFn build_forcing(const ScenarioConfig &c, const CoupledSystem &sys) {
    const CoupledLayout &lay = sys.layout;
    std::vector<double> spatial(static_cast<std::size_t>(lay.state_dim()), 0.0);
    const Vec3 center{{c.center[0], c.center[1], c.center[2]}};
    for (std::int64_t lc = 0; lc < lay.cells.count(); ++lc) {
        const Index3 cc = sys.partition.grid.cell_coords(lay.cells.cells[static_cast<std::size_t>(lc)]);
        if (c.support == ForcingSupport::Elastic && !sys.partition.in_elastic(cc)) continue;
        if (c.support == ForcingSupport::Em && !sys.partition.in_em(cc)) continue;
        const Vec3 x = sys.partition.grid.cell_center(cc);
        const Vec3 d = x - center;
        const double r2 = dot(d, d);
        spatial[static_cast<std::size_t>(3 * lc + c.component)] =
            c.amplitude * std::exp(-r2 / (2.0 * c.width * c.width));
    }
    const double onset = c.onset;
    const double duration = c.duration;
    const std::int64_t dim = lay.state_dim();
    return [spatial = std::move(spatial), onset, duration, dim](double t) {
        std::vector<double> f(static_cast<std::size_t>(dim), 0.0);
        if (t <= onset || t >= onset + duration) return f;
        const double s = std::sin(std::numbers::pi * (t - onset) / duration);
        const double p = s * s;
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = p * spatial[i];
        return f;
    };
}

inline Scenario build_scenario(const ScenarioConfig &c) {
    Scenario s;
    s.config = c;
    s.grid = build_grid(c);
    s.partition = build_partition(c, s.grid);
    if (c.em_type != EmMaterialType::Isotropic)
        throw ConfigError("simulation runs support isotropic electromagnetic media only; "
                          "other media are available through the admissibility check");
    ElasticMaterial elastic = ElasticMaterial::uniform(s.grid, c.rho, isotropic_stiffness(c.lame_lambda, c.lame_mu));
    EmMaterial em = EmMaterial::uniform(s.grid, c.epsilon, c.mu, c.sigma);
    s.system = assemble_coupled(s.grid, s.partition, elastic, em);
    s.forcing = build_forcing(c, s.system);
    s.time = TimeGrid(0.0, c.dt, c.steps);
    s.scheme = scheme_of(c);
    return s;
}

struct CheckReport {
    double eta = 0.0;
    double nu = 0.0;
    bool admissible = false;
    double eta_elastic = 0.0;
    double eta_em = 0.0;
    bool has_elastic = false;
    bool has_em = false;
};

/// Material admissibility from per-point catalog laws built to the config:
/// the elastic law on the elastic subdomain, the configured electromagnetic
/// law on the electromagnetic one. The reported constant is the minimum of
/// the two.
inline CheckReport cmd_check(const ScenarioConfig &c) {
    StaggeredGrid g = build_grid(c);
    DomainPartition part = build_partition(c, g);

    std::size_t n0 = 0, n1 = 0;
    for (std::size_t i = 0; i < part.mask_elastic.size(); ++i) {
        if (part.mask_elastic[i]) ++n0;
        if (part.mask_em[i]) ++n1;
    }

    CheckReport rep;
    rep.nu = c.nu;
    rep.eta = std::numeric_limits<double>::infinity();

    if (n0 > 0) {
        MaterialLaw law = make_elastic(std::vector<double>(n0, c.rho),
                                       std::vector<DenseMatrix>(n0, isotropic_stiffness(c.lame_lambda, c.lame_mu)));
        AdmissibilityReport r = check_evo_positivity(law, c.nu);
        rep.has_elastic = true;
        rep.eta_elastic = r.eta;
        rep.eta = std::min(rep.eta, r.eta);
    }
    if (n1 > 0) {
        MaterialLaw law = [&]() {
            switch (c.em_type) {
                case EmMaterialType::Isotropic:
                    return make_isotropic_em(std::vector<double>(n1, c.epsilon), std::vector<double>(n1, c.mu),
                                             std::vector<double>(n1, c.sigma));
                case EmMaterialType::Bianisotropic: {
                    Mat3 kap;
                    for (int i = 0; i < 3; ++i) kap(i, i) = c.kappa;
                    return make_bianisotropic(std::vector<double>(n1, c.epsilon), std::vector<double>(n1, c.mu),
                                              std::vector<Mat3>(n1, kap));
                }
                case EmMaterialType::Chiral: {
                    Mat3 chi;
                    for (int i = 0; i < 3; ++i) chi(i, i) = c.chi;
                    return combine(make_isotropic_em(std::vector<double>(n1, c.epsilon),
                                                     std::vector<double>(n1, c.mu),
                                                     std::vector<double>(n1, c.sigma)),
                                   make_chiral(std::vector<Mat3>(n1, chi)));
                }
                case EmMaterialType::Omega: {
                    const Mat3 chi = kSqrt2 * axial_to_skew(Vec3{{c.chi_axis[0], c.chi_axis[1], c.chi_axis[2]}});
                    return combine(make_isotropic_em(std::vector<double>(n1, c.epsilon),
                                                     std::vector<double>(n1, c.mu),
                                                     std::vector<double>(n1, c.sigma)),
                                   make_omega(std::vector<Mat3>(n1, chi)));
                }
            }
            throw Error("cmd_check: unhandled material type");
        }();
        AdmissibilityReport r = check_evo_positivity(law, c.nu);
        rep.has_em = true;
        rep.eta_em = r.eta;
        rep.eta = std::min(rep.eta, r.eta);
    }
    if (!rep.has_elastic && !rep.has_em) throw ConfigError("partition selects no cells");
    rep.admissible = rep.eta > 0.0;
    return rep;
}

struct RunReport {
    CheckReport admissibility;
    std::string run_csv;
    std::vector<std::string> face_csvs;
    std::string ch_csv;
    std::vector<std::string> vtk_files;
    double final_energy = 0.0;
    double max_causality_residual = 0.0;
    double max_traction = 0.0;
    double max_tangential = 0.0;
    double max_energy_residual_interface = 0.0;
    double max_normal_traction = 0.0;
};

namespace detail {

inline std::string csv_row(const std::vector<double> &vals) {
    std::string row;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (i) row += ',';
        row += fmt_g(vals[i]);
    }
    return row;
}

inline void write_vtk_snapshot(const std::string &path, const CoupledSystem &sys,
                               std::span<const double> state) {
    const StaggeredGrid &g = sys.partition.grid;
    std::ofstream out(path);
    out << "# vtk DataFile Version 3.0\n";
    out << "coupled state snapshot\n";
    out << "ASCII\n";
    out << "DATASET STRUCTURED_POINTS\n";
    out << "DIMENSIONS " << g.cells[0] << " " << g.cells[1] << " " << g.cells[2] << "\n";
    out << "ORIGIN " << fmt_g(g.origin[0] + 0.5 * g.spacing[0]) << " " << fmt_g(g.origin[1] + 0.5 * g.spacing[1])
        << " " << fmt_g(g.origin[2] + 0.5 * g.spacing[2]) << "\n";
    out << "SPACING " << fmt_g(g.spacing[0]) << " " << fmt_g(g.spacing[1]) << " " << fmt_g(g.spacing[2]) << "\n";
    out << "POINT_DATA " << g.cell_count() << "\n";

    // VTK structured points iterate x fastest.
    auto for_cells = [&](auto &&fn) {
        for (int k = 0; k < g.cells[2]; ++k)
            for (int j = 0; j < g.cells[1]; ++j)
                for (int i = 0; i < g.cells[0]; ++i) fn(Index3{i, j, k});
    };

    out << "VECTORS shared double\n";
    for_cells([&](Index3 c) {
        Vec3 v{};
        if (sys.partition.in_domain(c)) v = sys.shared_at(state, c);
        out << fmt_g(v[0]) << " " << fmt_g(v[1]) << " " << fmt_g(v[2]) << "\n";
    });

    out << "FIELD tensors 2\n";
    out << "stress 6 " << g.cell_count() << " double\n";
    for_cells([&](Index3 c) {
        Vec6 kelvin{};
        const std::int64_t ls = sys.layout.slots.local_of(c);
        if (ls >= 0 && sys.layout.stress_index[static_cast<std::size_t>(ls)] >= 0) {
            const Mat3 t = sys.stress_at(state, c);
            kelvin = sym_to_kelvin(t);
        }
        for (int k = 0; k < 6; ++k) out << fmt_g(kelvin[static_cast<std::size_t>(k)]) << (k == 5 ? "\n" : " ");
    });
    out << "magnetic 3 " << g.cell_count() << " double\n";
    for_cells([&](Index3 c) {
        Vec3 h{};
        const std::int64_t ls = sys.layout.slots.local_of(c);
        if (ls >= 0 && sys.layout.magnetic_index[static_cast<std::size_t>(ls)] >= 0) h = sys.magnetic_at(state, c);
        out << fmt_g(h[0]) << " " << fmt_g(h[1]) << " " << fmt_g(h[2]) << "\n";
    });
}

} // namespace detail

/// Full simulation run with per-step CSV output. Face-resolved interface
/// residuals (including the integrated-pairing variants) are written at the
/// configured cadence.
inline RunReport cmd_run(const ScenarioConfig &cfg, const std::string &out_override = {}) {
    Scenario sc = build_scenario(cfg);
    const std::string outdir = out_override.empty() ? cfg.out_directory : out_override;
    std::filesystem::create_directories(outdir);

    RunReport report;
    report.admissibility = cmd_check(cfg);

    // Solvability of the implicit step is admissibility at nu = 1/dt.
    MaterialLaw system_law(sc.system.evo.m0, sc.system.evo.m1, "assembled");
    AdmissibilityReport step_rep = check_evo_positivity(system_law, 1.0 / cfg.dt);
    if (!step_rep.admissible)
        throw InadmissibleMaterialError("cmd_run: system is not solvable at nu = 1/dt (eta = " +
                                        detail::fmt_g(step_rep.eta) + ")");

    const EvoSystem &evo = sc.system.evo;
    const double vol = evo.volume_weight;
    ImplicitStepper stepper(evo, cfg.dt, sc.scheme);
    SparseOperator sym_m1 = symmetric_part(evo.m1);

    auto energy_of = [&](std::span<const double> u) {
        std::vector<double> m0u(u.size());
        evo.m0.apply(u, m0u);
        double acc = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) acc += u[i] * m0u[i];
        return 0.5 * vol * acc;
    };

    std::ofstream run_csv(outdir + "/run.csv");
    run_csv << kRunCsvHeader << "\n";
    std::ofstream ch_csv(outdir + "/ch_compare.csv");
    ch_csv << "step,t,max_r_energy,max_r_energy_integrated,max_r_traction,max_r_traction_integrated\n";

    std::vector<double> state(static_cast<std::size_t>(evo.state_dim), 0.0);
    std::vector<double> integral(state.size(), 0.0);
    std::vector<double> ddt(state.size(), 0.0);

    double energy_prev = energy_of(state);
    double causality_running = 0.0;

    {
        InterfaceDiagnostics d0 = interface_diagnostics(sc.system, state);
        run_csv << detail::csv_row({0.0, energy_prev, 0.0, 0.0, 0.0, 0.0, d0.max_traction, d0.max_tangential,
                                    d0.max_energy, d0.max_normal_traction})
                << "\n";
    }

    for (std::int64_t n = 0; n < sc.time.steps; ++n) {
        const double t_next = sc.time.time(n + 1);
        std::vector<double> f = sc.forcing(stepper.forcing_time(sc.time.time(n)));
        std::vector<double> next = stepper.step(state, f);

        std::vector<double> mid(state.size());
        for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = 0.5 * (state[i] + next[i]);
        std::vector<double> tmp(state.size());
        sym_m1.apply(mid, tmp);
        double dissipation = 0.0;
        for (std::size_t i = 0; i < mid.size(); ++i) dissipation += mid[i] * tmp[i];
        dissipation *= vol;
        std::vector<double> f_mid = sc.forcing(sc.time.time(n) + 0.5 * cfg.dt);
        double work = 0.0;
        for (std::size_t i = 0; i < mid.size(); ++i) work += mid[i] * f_mid[i];
        work *= vol;

        const double energy = energy_of(next);
        const double residual = std::abs(energy - energy_prev + cfg.dt * dissipation - cfg.dt * work);

        for (std::size_t i = 0; i < state.size(); ++i) {
            integral[i] += 0.5 * cfg.dt * (state[i] + next[i]);
            ddt[i] = (next[i] - state[i]) / cfg.dt;
        }
        state.swap(next);
        energy_prev = energy;

        double state_norm = 0.0;
        for (double v : state) state_norm += v * v;
        state_norm = std::sqrt(state_norm);
        if (t_next < cfg.onset) causality_running = std::max(causality_running, state_norm);

        InterfaceDiagnostics diag = interface_diagnostics(sc.system, state);
        report.max_traction = std::max(report.max_traction, diag.max_traction);
        report.max_tangential = std::max(report.max_tangential, diag.max_tangential);
        report.max_energy_residual_interface = std::max(report.max_energy_residual_interface, diag.max_energy);
        report.max_normal_traction = std::max(report.max_normal_traction, diag.max_normal_traction);

        run_csv << detail::csv_row({t_next, energy, dissipation, work, residual, causality_running,
                                    diag.max_traction, diag.max_tangential, diag.max_energy,
                                    diag.max_normal_traction})
                << "\n";

        if ((n + 1) % cfg.cadence == 0 || n + 1 == sc.time.steps) {
            ChDiagnostics ch = cakoni_hsiao_from_parts(sc.system, state, integral, ddt);
            ch_csv << n + 1 << "," << detail::fmt_g(t_next) << "," << detail::fmt_g(diag.max_energy) << ","
                   << detail::fmt_g(ch.max_energy) << "," << detail::fmt_g(diag.max_traction) << ","
                   << detail::fmt_g(ch.max_traction) << "\n";

            char name[64];
            std::snprintf(name, sizeof name, "faces_%06lld.csv", static_cast<long long>(n + 1));
            const std::string face_path = outdir + "/" + name;
            std::ofstream faces(face_path);
            faces << "face_id,x,y,z,nx,ny,nz,r_traction,r_tangential,r_energy,r_nTn,"
                     "r_traction_integrated,r_tangential_integrated,r_energy_integrated\n";
            for (std::size_t fi = 0; fi < diag.faces.size(); ++fi) {
                const FaceResiduals &fr = diag.faces[fi];
                const ChFaceResiduals &cr = ch.faces[fi];
                faces << fr.face_id << ","
                      << detail::csv_row({fr.position[0], fr.position[1], fr.position[2], fr.normal[0],
                                          fr.normal[1], fr.normal[2], fr.traction, fr.tangential, fr.energy,
                                          fr.normal_traction, cr.traction, cr.tangential, cr.energy})
                      << "\n";
            }
            report.face_csvs.push_back(face_path);

            if (cfg.vtk) {
                std::snprintf(name, sizeof name, "state_%06lld.vtk", static_cast<long long>(n + 1));
                const std::string vtk_path = outdir + "/" + name;
                detail::write_vtk_snapshot(vtk_path, sc.system, state);
                report.vtk_files.push_back(vtk_path);
            }
        }
    }

    report.run_csv = outdir + "/run.csv";
    report.ch_csv = outdir + "/ch_compare.csv";
    report.final_energy = energy_prev;
    report.max_causality_residual = causality_running;
    return report;
}

struct ConvergenceRow {
    int level = 0;
    double h = 0.0;
    double dt = 0.0;
    double max_traction = 0.0;
    double max_tangential = 0.0;
    double max_energy = 0.0;
    double max_normal_traction = 0.0;
    bool truncated = false;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    std::vector<double> order_traction;
    std::vector<double> order_tangential;
    std::vector<double> order_energy;
    std::vector<double> order_normal_traction;
    bool truncated = false;
};

/// Refinement study: the scenario is rerun with cells doubled and spacing,
/// dt halved per level (subdomain boxes scale along), and the largest
/// interface residuals over each run are tabulated with observed orders.
inline ConvergenceTable cmd_convergence(const ScenarioConfig &base, int levels,
                                        std::int64_t state_dim_cap = 4'000'000) {
    if (levels < 2) throw UsageError("convergence: need at least 2 refinement levels");
    ConvergenceTable table;
    for (int lvl = 0; lvl < levels; ++lvl) {
        ScenarioConfig c = base;
        const int f = 1 << lvl;
        for (int a = 0; a < 3; ++a) {
            c.cells[static_cast<std::size_t>(a)] *= f;
            c.spacing[static_cast<std::size_t>(a)] /= f;
        }
        for (int a = 0; a < 6; ++a) {
            c.omega0[static_cast<std::size_t>(a)] *= f;
            c.omega1[static_cast<std::size_t>(a)] *= f;
        }
        c.dt /= f;
        c.steps *= f;
        c.cadence = base.cadence * f;

        const std::int64_t ncells = static_cast<std::int64_t>(c.cells[0]) * c.cells[1] * c.cells[2];
        if (12 * ncells > state_dim_cap) {
            ConvergenceRow row;
            row.level = lvl;
            row.h = c.spacing[0];
            row.dt = c.dt;
            row.truncated = true;
            table.rows.push_back(row);
            table.truncated = true;
            break;
        }

        char sub[32];
        std::snprintf(sub, sizeof sub, "/level_%d", lvl);
        RunReport rep = cmd_run(c, base.out_directory + sub);

        ConvergenceRow row;
        row.level = lvl;
        row.h = c.spacing[0];
        row.dt = c.dt;
        row.max_traction = rep.max_traction;
        row.max_tangential = rep.max_tangential;
        row.max_energy = rep.max_energy_residual_interface;
        row.max_normal_traction = rep.max_normal_traction;
        table.rows.push_back(row);
    }

    auto orders = [](auto getter, const std::vector<ConvergenceRow> &rows) {
        std::vector<double> out;
        for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
            if (rows[i].truncated || rows[i + 1].truncated) break;
            out.push_back(std::log2(getter(rows[i]) / getter(rows[i + 1])));
        }
        return out;
    };
    table.order_traction = orders([](const ConvergenceRow &r) { return r.max_traction; }, table.rows);
    table.order_tangential = orders([](const ConvergenceRow &r) { return r.max_tangential; }, table.rows);
    table.order_energy = orders([](const ConvergenceRow &r) { return r.max_energy; }, table.rows);
    table.order_normal_traction =
        orders([](const ConvergenceRow &r) { return r.max_normal_traction; }, table.rows);
    return table;
}

struct TemporalOrderRow {
    double dt = 0.0;
    double error = 0.0;
};

struct TemporalOrderTable {
    std::vector<TemporalOrderRow> rows;
    std::vector<double> orders;
};

/// Temporal self-convergence on a fixed grid: the state history
/// U(t) = p(t) * shape solves the semi-discrete system exactly under a
/// manufactured forcing, so the measured error is purely the time
/// discretization error.
inline TemporalOrderTable cmd_temporal_order(const ScenarioConfig &base, int levels) {
    if (levels < 2) throw UsageError("temporal order study: need at least 2 levels");
    Scenario sc = build_scenario(base);
    const EvoSystem &evo = sc.system.evo;

    std::vector<double> shape(static_cast<std::size_t>(evo.state_dim));
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (double &v : shape) v = dist(rng);

    auto profile = [](double t) { return std::sin(1.3 * t) * std::cos(0.4 * t); };
    auto profile_dt = [](double t) { return 1.3 * std::cos(1.3 * t) * std::cos(0.4 * t) - 0.4 * std::sin(1.3 * t) * std::sin(0.4 * t); };

    auto state_at = [&](double t) {
        std::vector<double> u(shape.size());
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = profile(t) * shape[i];
        return u;
    };
    auto state_dt_at = [&](double t) {
        std::vector<double> u(shape.size());
        for (std::size_t i = 0; i < u.size(); ++i) u[i] = profile_dt(t) * shape[i];
        return u;
    };
    ForcingFn forcing = manufactured_forcing(evo, state_at, state_dt_at);

    const double t_end = base.dt * static_cast<double>(base.steps);
    TemporalOrderTable table;
    std::vector<double> errors;
    for (int lvl = 0; lvl < levels; ++lvl) {
        const int f = 1 << lvl;
        TimeGrid grid(0.0, base.dt / f, base.steps * f);
        Trajectory traj = run_from(evo, state_at(0.0), forcing, grid, sc.scheme, 1e-12);
        std::vector<double> exact = state_at(t_end);
        double err = 0.0, nrm = 0.0;
        for (std::size_t i = 0; i < exact.size(); ++i) {
            const double d = traj.states.back()[i] - exact[i];
            err += d * d;
            nrm += exact[i] * exact[i];
        }
        err = std::sqrt(err / std::max(nrm, 1e-300));
        table.rows.push_back({grid.dt, err});
        errors.push_back(err);
    }
    table.orders = observed_orders(errors);
    return table;
}

} // namespace evosim
