#include "splitdyn/potential.hpp"
#include "splitdyn/errors.hpp"
#include "splitdyn/quad.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

namespace splitdyn {

namespace {

// log(cosh(z)) without overflow
double log_cosh(double z) {
    const double az = std::abs(z);
    return az + std::log1p(std::exp(-2.0 * az)) - M_LN2;
}

// sech^2(z) without overflow
double sech2(double z) {
    const double e = std::exp(-2.0 * std::abs(z));
    const double s = 2.0 * std::sqrt(e) / (1.0 + e);
    return s * s;
}

std::string point_msg(const char* what, double x, double v) {
    std::ostringstream os;
    os << what << " at x=" << x << " (value " << v << ")";
    return os.str();
}

std::map<std::string,
         std::function<PotentialModel(const std::map<std::string, double>&)>>&
registry() {
    static std::map<std::string,
                    std::function<PotentialModel(const std::map<std::string, double>&)>>
        r;
    return r;
}

std::mutex& registry_mutex() {
    static std::mutex m;
    return m;
}

double param_or(const std::map<std::string, double>& p, const std::string& k,
                double dflt) {
    auto it = p.find(k);
    return it == p.end() ? dflt : it->second;
}

} // namespace

PotentialModel reference_potential(double alpha, double beta, double gamma) {
    PotentialModel m;
    m.H = [=](double x) { return 0.5 * alpha * x * x - (beta / gamma) * log_cosh(gamma * x); };
    m.H1 = [=](double x) { return alpha * x - beta * std::tanh(gamma * x); };
    m.H2 = [=](double x) { return alpha - beta * gamma * sech2(gamma * x); };
    m.H3 = [=](double x) {
        return 2.0 * beta * gamma * gamma * sech2(gamma * x) * std::tanh(gamma * x);
    };
    m.H4 = [=](double x) {
        const double s2 = sech2(gamma * x);
        const double th = std::tanh(gamma * x);
        return 2.0 * beta * gamma * gamma * gamma * s2 * (s2 - 2.0 * th * th);
    };
    m.alpha = alpha;
    m.g_bound = beta;
    m.h2_bound = std::abs(alpha) + beta * gamma;
    m.family = "reference";
    m.params = {{"alpha", alpha}, {"beta", beta}, {"gamma", gamma}};
    return m;
}

void register_potential(
    const std::string& name,
    std::function<PotentialModel(const std::map<std::string, double>&)> factory) {
    std::lock_guard<std::mutex> lock(registry_mutex());
    registry()[name] = std::move(factory);
}

PotentialModel make_potential(const std::string& name,
                              const std::map<std::string, double>& params) {
    if (name == "reference")
        return reference_potential(param_or(params, "alpha", 1.0),
                                   param_or(params, "beta", 2.0),
                                   param_or(params, "gamma", 1.0));
    std::lock_guard<std::mutex> lock(registry_mutex());
    auto it = registry().find(name);
    if (it == registry().end())
        throw config_error("unknown potential '" + name + "'");
    return it->second(params);
}

std::vector<std::string> validate(const PotentialModel& model,
                                  const ProbeGrid& grid) {
    std::vector<std::string> violations;
    const auto n = static_cast<std::size_t>(std::llround((grid.hi - grid.lo) / grid.step)) + 1;

    bool g_ok = true, h2_ok = true, any_negative = false;
    double g_worst_x = 0, g_worst = 0, h2_worst_x = 0, h2_worst = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = grid.lo + static_cast<double>(i) * grid.step;
        const double h1 = model.H1(x);
        const double h2 = model.H2(x);
        if (!std::isfinite(h1) || !std::isfinite(h2)) {
            violations.push_back(point_msg("evaluation failure", x,
                                           std::isfinite(h1) ? h2 : h1));
            return violations;
        }
        const double g = h1 - model.alpha * x;
        if (std::abs(g) > model.g_bound + 1e-12 && std::abs(g) > std::abs(g_worst)) {
            g_ok = false;
            g_worst = g;
            g_worst_x = x;
        }
        if (std::abs(h2) > model.h2_bound + 1e-12 && std::abs(h2) > std::abs(h2_worst)) {
            h2_ok = false;
            h2_worst = h2;
            h2_worst_x = x;
        }
        if (h2 < 0.0) any_negative = true;
    }
    if (!g_ok)
        violations.push_back("(A1): g = H' - alpha x exceeds declared bound, " +
                             point_msg("worst", g_worst_x, g_worst));
    if (!h2_ok)
        violations.push_back("(A1): H'' unbounded (exceeds declared bound), " +
                             point_msg("worst", h2_worst_x, h2_worst));
    if (!any_negative) {
        violations.push_back("(A2): no spinodal interval (H'' never negative on probe grid)");
        return violations;
    }

    // shape: H'' negative exactly on one interval containing its minimum,
    // nonnegative outside
    double xneg_lo = 0, xneg_hi = 0;
    bool in_neg = false;
    int neg_intervals = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = grid.lo + static_cast<double>(i) * grid.step;
        const bool neg = model.H2(x) < 0.0;
        if (neg && !in_neg) {
            ++neg_intervals;
            in_neg = true;
            xneg_lo = x;
        }
        if (!neg && in_neg) {
            in_neg = false;
            xneg_hi = x;
        }
    }
    if (in_neg) xneg_hi = grid.hi;
    if (neg_intervals > 1)
        violations.push_back("(A2): multiple spinodal intervals on probe grid");
    if (xneg_lo >= 0.0 || xneg_hi <= 0.0)
        violations.push_back("(A2): spinodal interval does not contain 0");

    // branch monotonicity outside the spinodal interval (plateaus flagged)
    double prev = model.H1(grid.lo);
    double plateau_x = 0;
    bool plateau = false;
    for (std::size_t i = 1; i < n; ++i) {
        const double x = grid.lo + static_cast<double>(i) * grid.step;
        if (x <= xneg_lo - grid.step || x >= xneg_hi + grid.step) {
            const double cur = model.H1(x);
            if (cur < prev - 1e-12) {
                violations.push_back(point_msg("(A2): stable branch not increasing", x, cur));
                break;
            }
            if (cur == prev && !plateau) {
                plateau = true;
                plateau_x = x;
            }
            prev = cur;
        } else {
            prev = model.H1(x);
        }
    }
    if (plateau)
        violations.push_back(point_msg("(A2): plateau on stable branch", plateau_x, 0.0));

    // derivative consistency on a standard probe set
    const double fd_step = 1e-5;
    const double probes[] = {-3.0, -1.7, -0.4, 0.3, 1.1, 2.6};
    auto check_pair = [&](const std::function<double(double)>& f,
                          const std::function<double(double)>& df,
                          const char* name) {
        for (double x : probes) {
            const double fd = (f(x + fd_step) - f(x - fd_step)) / (2.0 * fd_step);
            const double d = df(x);
            const double scale = std::max(1.0, std::abs(d));
            if (std::abs(fd - d) / scale > 1e-6) {
                violations.push_back(std::string("derivative mismatch: ") + name +
                                     " " + point_msg("at", x, fd - d));
                return;
            }
        }
    };
    check_pair(model.H, model.H1, "H -> H'");
    check_pair(model.H1, model.H2, "H' -> H''");
    check_pair(model.H2, model.H3, "H'' -> H'''");
    return violations;
}

SpinodalChart spinodal_chart(const PotentialModel& model) {
    SpinodalChart chart;
    if (!(model.H2(0.0) < 0.0))
        throw numeric_error("no spinodal points found: H''(0) >= 0");

    // roots of H'' bracketed by outward scan from 0
    auto find_zero = [&](double dir) {
        double x = 0.0, step = 0.25;
        for (int k = 0; k < 64; ++k) {
            const double nxt = x + dir * step;
            if (model.H2(nxt) >= 0.0)
                return bisect(model.H2, std::min(x, nxt), std::max(x, nxt), 0.0, 1e-15);
            x = nxt;
            step *= 1.5;
        }
        throw numeric_error("no spinodal points found: H'' stays negative");
    };
    chart.x_star_minus = find_zero(-1.0);
    chart.x_star_plus = find_zero(+1.0);
    chart.sigma_star_plus = model.H1(chart.x_star_minus);
    chart.sigma_star_minus = model.H1(chart.x_star_plus);

    // outer states with matching slopes
    chart.x_2star_plus =
        bisect_expand(model.H1, chart.x_star_plus, +1.0, chart.sigma_star_plus, 1e-13);
    chart.x_2star_minus =
        bisect_expand(model.H1, chart.x_star_minus, -1.0, chart.sigma_star_minus, 1e-13);
    return chart;
}

double branch_solve(const PotentialModel& model, const SpinodalChart& chart,
                    double sigma, Branch branch) {
    const double tol = 1e-13;
    switch (branch) {
    case Branch::minus:
        if (sigma > chart.sigma_star_plus)
            throw numeric_error("branch domain violation: sigma above upper spinodal force");
        if (sigma == chart.sigma_star_plus) return chart.x_star_minus;
        return bisect_expand(model.H1, chart.x_star_minus, -1.0, sigma, tol);
    case Branch::zero:
        if (sigma < chart.sigma_star_minus || sigma > chart.sigma_star_plus)
            throw numeric_error("branch domain violation: sigma outside spinodal range");
        // H' decreasing on the spinodal interval
        return bisect(model.H1, chart.x_star_minus, chart.x_star_plus, sigma, tol);
    case Branch::plus:
        if (sigma < chart.sigma_star_minus)
            throw numeric_error("branch domain violation: sigma below lower spinodal force");
        if (sigma == chart.sigma_star_minus) return chart.x_star_plus;
        return bisect_expand(model.H1, chart.x_star_plus, +1.0, sigma, tol);
    }
    throw numeric_error("branch domain violation");
}

WellPreparedData prepare(const PotentialModel& model, const SpinodalChart& chart,
                         double m, Anchor anchor) {
    if (!(m > 0.0) || m > 1.0)
        throw config_error("m must be in (0,1]");

    double sigma0;
    if (anchor.kind == Anchor::Kind::sigma0) {
        sigma0 = anchor.value;
        if (sigma0 <= chart.sigma_star_minus || sigma0 >= chart.sigma_star_plus)
            throw numeric_error("sigma0 outside the open spinodal force interval");
    } else {
        // solve m X0(sigma) + (1-m) X+(sigma) = ell_star; the map is strictly
        // decreasing wherever the stability inequality holds
        const double eps = 1e-9 * (chart.sigma_star_plus - chart.sigma_star_minus);
        auto moment = [&](double s) {
            return m * branch_solve(model, chart, s, Branch::zero) +
                   (1.0 - m) * branch_solve(model, chart, s, Branch::plus);
        };
        const double lo = chart.sigma_star_minus + eps;
        const double hi = chart.sigma_star_plus - eps;
        const int scan = 64;
        double prev_s = lo, prev_f = moment(lo) - anchor.value;
        double found = std::numeric_limits<double>::quiet_NaN();
        for (int i = 1; i <= scan; ++i) {
            const double s = lo + (hi - lo) * i / scan;
            const double f = moment(s) - anchor.value;
            if (f == 0.0 || (f > 0) != (prev_f > 0)) {
                found = bisect([&](double ss) { return moment(ss); }, prev_s, s,
                               anchor.value, 1e-13);
                break;
            }
            prev_s = s;
            prev_f = f;
        }
        if (!std::isfinite(found))
            throw numeric_error("no sigma0 matches ell_star");
        sigma0 = found;
    }

    WellPreparedData d;
    d.m = m;
    d.sigma0 = sigma0;
    d.x0 = branch_solve(model, chart, sigma0, Branch::zero);
    d.x_plus = branch_solve(model, chart, sigma0, Branch::plus);
    d.x_minus = branch_solve(model, chart, sigma0, Branch::minus);
    d.a = model.H2(d.x0);
    d.b = model.H2(d.x_plus);
    d.ell_star = m * d.x0 + (1.0 - m) * d.x_plus;
    if (anchor.kind == Anchor::Kind::ell_star &&
        std::abs(d.ell_star - anchor.value) > 1e-10)
        throw numeric_error("no sigma0 matches ell_star");
    if (!(d.a < 0.0))
        throw numeric_error("curvature sign violation: H''(x0) >= 0");
    if (!(d.b > 0.0))
        throw numeric_error("curvature sign violation: H''(x_plus) <= 0");
    if (!((1.0 - m) * d.a + m * d.b > 0.0)) {
        std::ostringstream os;
        os << "stability violated: (1-m)a+mb = " << (1.0 - m) * d.a + m * d.b
           << " <= 0";
        throw stability_error(os.str());
    }
    return d;
}

BranchExpansion branch_expansion(const PotentialModel& model,
                                 const SpinodalChart& chart) {
    const double h3 = model.H3(chart.x_star_minus);
    if (std::abs(h3) < 1e-8)
        throw numeric_error("degenerate spinodal: H'''(x_star)=0");
    BranchExpansion e;
    // Taylor constants of delta_sigma = c1 A^2 + c2 A^3 + ... (positive c1)
    e.taylor_c1 = -0.5 * h3;
    e.taylor_c2 = -model.H4(chart.x_star_minus) / 6.0;
    e.c = std::sqrt(2.0 / std::abs(h3));
    e.a1_zero = std::sqrt(1.0 / std::abs(e.taylor_c1));
    e.a1_minus = -e.a1_zero;
    e.a2 = -e.taylor_c2 / (2.0 * e.taylor_c1 * e.taylor_c1);
    e.b_lin = 1.0 / model.H2(chart.x_2star_plus);

    const double xs = chart.x_star_minus;
    const double x2s = chart.x_2star_plus;
    const double a1 = e.a1_zero, a2 = e.a2, bl = e.b_lin;
    e.predict_zero = [xs, a1, a2](double sigma_gap) {
        return xs + a1 * std::sqrt(sigma_gap) + a2 * sigma_gap;
    };
    e.predict_minus = [xs, a1, a2](double sigma_gap) {
        return xs - a1 * std::sqrt(sigma_gap) + a2 * sigma_gap;
    };
    e.predict_plus = [x2s, bl](double sigma_gap) { return x2s - bl * sigma_gap; };
    return e;
}

} // namespace splitdyn
