// acceptance.cpp — end-to-end acceptance suite. Runs every acceptance
// criterion at its stated tolerance and prints one PASS/FAIL line per
// criterion; exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "cdbound/bounds.hpp"
#include "cdbound/dynamics.hpp"
#include "cdbound/experiment.hpp"
#include "cdbound/optimizer.hpp"

using namespace cdbound;

namespace {

constexpr double kPi = std::numbers::pi;

int g_failures = 0;

void report(int criterion, const std::string& name, bool pass, const std::string& detail) {
    std::printf("[%s] %2d  %s%s%s\n", pass ? "PASS" : "FAIL", criterion, name.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

bath::SpectralDensity fig2_bath(double lambda = 0.1) {
    return bath::SpectralDensity::underdamped(1.0, 0.1, lambda);
}

ProtocolSpec fig2_sinh(double a, double delta = 1.0) {
    return ProtocolSpec::sinh_drive(delta, 2.0, -1.0, 1.0, a);
}

double trapezoid(const std::function<double(double)>& f, double lo, double hi, std::size_t n) {
    const double h = (hi - lo) / static_cast<double>(n - 1);
    double acc = 0.5 * (f(lo) + f(hi));
    for (std::size_t k = 1; k + 1 < n; ++k) acc += f(lo + h * static_cast<double>(k));
    return acc * h;
}

// ---- criteria 1 and 2 share the Fig. 2 sweep ----

std::vector<cli::Fig2Row> g_fig2_rows;

void criterion_1_bound_validity() {
    const auto t0 = std::chrono::steady_clock::now();
    auto cfg = cli::ExperimentConfig::from_json(nlohmann::json::object());
    cfg.out = "acceptance_fig2.csv";
    const auto outcome = cli::run_fig2(cfg);
    g_fig2_rows = outcome.rows;

    double worst_margin = 1e300;
    bool all_converged = true;
    for (const auto& r : outcome.rows) {
        worst_margin = std::min(worst_margin, r.margin);
        all_converged = all_converged && r.heom_converged;
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(1, "fidelity >= cos^2(l_BD) - 1e-3 across the 20x3 sweep",
           all_converged && worst_margin >= -1e-3 && outcome.exit_code == 0,
           "worst margin " + fmt(worst_margin) + ", " +
               std::to_string(outcome.rows.size()) + " converged runs in " + fmt(seconds) + " s");
}

void criterion_2_steepness_ordering() {
    std::map<double, std::map<double, cli::Fig2Row>> by_delta;
    for (const auto& r : g_fig2_rows) by_delta[r.delta][r.steepness] = r;
    double worst = 0.0;  // most negative increase
    for (const auto& [delta, rows] : by_delta) {
        const cli::Fig2Row* prev = nullptr;
        for (const auto& [a, row] : rows) {
            if (prev) {
                worst = std::min(worst, row.fidelity_lower_bound - prev->fidelity_lower_bound);
                worst = std::min(worst, row.heom_fidelity - prev->heom_fidelity);
            }
            prev = &row;
        }
    }
    report(2, "bound and fidelity nondecreasing in the steepness a", worst >= -1e-4,
           "worst a-step change " + fmt(worst));
}

void criterion_3_exact_sta() {
    auto cfg = cli::ExperimentConfig::from_json(
        nlohmann::json::parse(R"({"bath": {"beta": 10.0}})"));
    cfg.out = "acceptance_sta.csv";
    const auto o = cli::run_sta_verify(cfg);
    report(3, "exact STA reaches F >= 0.999 and beats the static angle",
           o.exit_code == 0 && o.sta_fidelity >= 0.999 && o.static_fidelity < o.sta_fidelity,
           "F_sta " + fmt(o.sta_fidelity) + ", F_static " + fmt(o.static_fidelity));
}

void criterion_4_saturation() {
    const auto fn = bath::BathFunctionals::tabulate(fig2_bath(), 1.0, 2.0, 201);
    const auto sta = bounds::l_bd_lz(fig2_sinh(3.0), CouplingAngle::sta(), fn);
    const auto fn0 = bath::BathFunctionals::tabulate(fig2_bath(0.0), 1.0, 2.0, 101);
    const auto decoupled = bounds::l_bd_lz(fig2_sinh(3.0), CouplingAngle::fixed(kPi / 4), fn0);
    report(4, "l_BD = 0 for the sta angle and for zero coupling",
           sta.l_bd == 0.0 && decoupled.l_bd == 0.0,
           "sta " + fmt(sta.l_bd) + ", lambda=0 " + fmt(decoupled.l_bd));
}

void criterion_5_weak_coupling_scaling() {
    const auto spec = fig2_sinh(3.0);
    const auto angle = CouplingAngle::fixed(kPi / 4);
    const auto bound_at = [&](double lambda) {
        const auto fn = bath::BathFunctionals::tabulate(fig2_bath(lambda), 1.0, 2.0, 201);
        return bounds::l_bd_lz(spec, angle, fn);
    };
    const auto b_half = bound_at(0.05);
    const auto b_full = bound_at(0.1);
    const double ratio =
        (1.0 - b_full.fidelity_lower_bound) / (1.0 - b_half.fidelity_lower_bound);
    const bool quadratic = std::abs(ratio - 4.0) <= 0.05 * 4.0;

    const double e_full = std::abs(bounds::weak_coupling_bound(spec, angle, fig2_bath(0.1), 1.0) -
                                   b_full.fidelity_lower_bound);
    const double e_half = std::abs(bounds::weak_coupling_bound(spec, angle, fig2_bath(0.05), 1.0) -
                                   b_half.fidelity_lower_bound);
    const double contraction = e_full / e_half;
    const bool quartic = std::abs(contraction - 16.0) <= 0.30 * 16.0;

    report(5, "error scales as lambda^2, weak-coupling formula as lambda^4",
           quadratic && quartic,
           "1-F_bound ratio " + fmt(ratio) + " (want 4), contraction " + fmt(contraction) +
               " (want 16)");
}

void criterion_6_general_reduction() {
    const auto fn = bath::BathFunctionals::tabulate(fig2_bath(), 1.0, 2.0, 201);
    const auto spec = fig2_sinh(3.0);
    double max_dev = 0.0;
    for (int k = 0; k < 10; ++k) {
        const double phi = (k + 0.5) * kPi / 20.0;
        const auto lz = bounds::l_bd_lz(spec, CouplingAngle::fixed(phi), fn, 20001);

        bounds::GeneralSystemSpec sys;
        sys.dim = 2;
        Eigen::MatrixXcd a(2, 2);
        a << std::cos(2.0 * phi), std::sin(2.0 * phi), std::sin(2.0 * phi),
            -std::cos(2.0 * phi);
        sys.couplings = {a};
        sys.target_state = [&spec](double t) {
            const auto g = ground_state(spec.q(t), spec.delta);
            Eigen::VectorXcd v(2);
            v << g.up, g.down;
            return v;
        };
        sys.baths = {{fn.S, [&fn](double t) { return fn.X_at(t); }}};
        const auto gen = bounds::l_bd_general(sys, spec.tau, 20001);
        max_dev = std::max(max_dev, std::abs(gen.l_bd - lz.l_bd));
    }
    report(6, "general bound reduces to the LZ bound over 10 angles", max_dev < 1e-9,
           "max |l_general - l_lz| = " + fmt(max_dev));
}

void criterion_7_bath_functionals() {
    const auto j = fig2_bath();
    const double s = bath::compute_S(j, 1.0).value;
    const double s_oracle = trapezoid(
        [&](double w) { return j.value(w) / kPi / std::tanh(0.5 * w); }, 1e-6, 200.0,
        10'000'001);
    const double s_rel = std::abs(s - s_oracle) / s_oracle;

    const double x2 = bath::compute_X(j, 2.0).value;
    const double x_oracle = trapezoid(
        [&](double w) { return 2.0 / (kPi * w) * j.value(w) * (1.0 - std::cos(2.0 * w)); },
        1e-6, 200.0, 10'000'001);
    const double x_rel = std::abs(x2 - x_oracle) / x_oracle;

    const bool x0_zero = bath::compute_X(j, 0.0).value == 0.0;

    double prev = 0.0;
    bool stabilizes = true;
    for (double beta : {0.1, 0.01, 0.001}) {
        const double product = bath::compute_S(j, beta).value * beta;
        if (prev != 0.0) stabilizes = stabilizes && std::abs(product / prev - 1.0) < 0.02;
        prev = product;
    }

    report(7, "S and X match brute-force quadrature; X(0)=0; S ~ 1/beta",
           s_rel < 1e-6 && x_rel < 1e-6 && x0_zero && stabilizes,
           "rel dev S " + fmt(s_rel) + ", X " + fmt(x_rel));
}

void criterion_8_optimal_drive() {
    const auto fn = bath::BathFunctionals::tabulate(fig2_bath(), 1.0, 2.0, 201);
    const double qstar = q_optimal(kPi / 4, 1.0);
    bool decreasing = true;
    double prev = 1e300, last = 0.0;
    for (double ramp : {0.5, 0.25, 0.125, 0.0625}) {
        std::vector<double> t{0.0}, q{-1.0};
        for (double tk = ramp; tk < 2.0 - ramp / 2; tk += ramp) {
            t.push_back(tk);
            q.push_back(qstar);
        }
        t.push_back(2.0);
        q.push_back(1.0);
        const auto spec = ProtocolSpec::tabulated(1.0, t, q);
        last = bounds::l_bd_lz(spec, CouplingAngle::fixed(kPi / 4), fn).l_bd;
        decreasing = decreasing && last < prev;
        prev = last;
    }
    report(8, "step-like splines toward q* drive l_BD below 0.05 monotonically",
           decreasing && last < 0.05, "sharpest member l_BD = " + fmt(last));
}

void criterion_9_isolated_cd() {
    double worst = 1.0;
    const auto check = [&worst](const ProtocolSpec& spec) {
        dynamics::HeomOptions h;
        h.convergence_check = false;
        worst = std::min(worst, dynamics::run_heom(spec, CouplingAngle::fixed(kPi / 4),
                                                   fig2_bath(0.0), 1.0, h)
                                    .final_fidelity);
        worst = std::min(worst, dynamics::run_pseudomode(spec, CouplingAngle::fixed(kPi / 4),
                                                         fig2_bath(0.0), 1.0)
                                    .final_fidelity);
        worst = std::min(worst, dynamics::run_unitary_isolated(spec).final_fidelity);
    };
    for (double a : {1.0, 3.0, 10.0}) check(fig2_sinh(a));
    check(ProtocolSpec::linear(1.0, 2.0, -1.0, 1.0));
    {  // tabulated rendition of the a = 3 drive
        const auto src = fig2_sinh(3.0);
        std::vector<double> t, q;
        for (int k = 0; k <= 128; ++k) {
            t.push_back(2.0 * k / 128.0);
            q.push_back(src.q(t.back()));
        }
        check(ProtocolSpec::tabulated(1.0, t, q));
    }
    report(9, "isolated CD is exact for every family and steepness", worst >= 1.0 - 1e-8,
           "worst fidelity deficit " + fmt(1.0 - worst));
}

void criterion_10_cross_solver() {
    const auto spec = fig2_sinh(3.0);
    const auto angle = CouplingAngle::fixed(kPi / 4);
    const auto heom = dynamics::run_heom(spec, angle, fig2_bath(), 10.0);
    const auto pseudo = dynamics::run_pseudomode(spec, angle, fig2_bath(), 10.0);
    const double dev = std::abs(heom.final_fidelity - pseudo.final_fidelity);
    report(10, "HEOM and pseudomode agree within 2e-2 at beta = 10",
           heom.convergence.converged && pseudo.convergence.converged && dev < 2e-2,
           "|F_heom - F_pseudo| = " + fmt(dev));
}

}  // namespace

int main() {
    std::printf("cdbound acceptance suite\n");
    criterion_1_bound_validity();
    criterion_2_steepness_ordering();
    criterion_3_exact_sta();
    criterion_4_saturation();
    criterion_5_weak_coupling_scaling();
    criterion_6_general_reduction();
    criterion_7_bath_functionals();
    criterion_8_optimal_drive();
    criterion_9_isolated_cd();
    criterion_10_cross_solver();
    std::printf("%d/10 criteria passed\n", 10 - g_failures);
    return g_failures == 0 ? 0 : 1;
}
