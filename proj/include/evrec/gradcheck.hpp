#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "evrec/nn.hpp"
#include "evrec/rng.hpp"

namespace evrec {

struct GradCheckReport {
    int configs = 0;
    long checks = 0;
    double max_rel_err = 0.0;
    int worst_config = -1;
    std::string worst_site;  // "w[l][i]", "b[l][i]" or "x[i]"
    double worst_analytic = 0.0;
    double worst_fd = 0.0;

    bool pass(double tol = 1e-4) const { return max_rel_err < tol; }
};

// Compares reverse-mode gradients against central finite differences on
// random networks (depths 1-4, widths 1-32), for every parameter and every
// input. The error is |analytic - fd| / max(|analytic|, |fd|, 1e-4); the
// floor keeps finite-difference noise on near-zero gradients from
// registering as relative blow-ups. `corrupt` deliberately breaks one
// gradient so tests can see the check fail.
inline GradCheckReport run_gradcheck(int n_configs = 100, std::uint64_t seed = 20240817,
                                     double step = 1e-5, bool corrupt = false) {
    RngStream rng(seed);
    GradCheckReport rep;
    for (int c = 0; c < n_configs; ++c) {
        const int depth = 1 + static_cast<int>(rng.next_below(4));
        std::vector<int> dims{1 + static_cast<int>(rng.next_below(16))};
        for (int l = 0; l < depth; ++l) dims.push_back(1 + static_cast<int>(rng.next_below(32)));
        const bool activate_output = rng.bernoulli(0.5);

        // The map from any single parameter (or input) to the output is
        // piecewise linear, so central differences are exact unless the
        // difference window straddles an activation kink. Keep every
        // pre-activation at least 1e-3 away from zero -- two orders of
        // magnitude beyond what a 1e-5 perturbation can shift -- resampling
        // the input (or in pathological cases the network) until that holds.
        Mlp net(dims, rng, activate_output);
        std::vector<double> x(net.input_dim());
        Mlp::Tape tape;
        for (int tries = 0;; ++tries) {
            if (tries == 50) {
                net = Mlp(dims, rng, activate_output);
                tries = 0;
            }
            for (auto& e : x) e = 2.0 * rng.next_double() - 1.0;
            net.forward(x, tape);
            double margin = 1e30;
            for (const auto& layer : tape.pre)
                for (double z : layer) margin = std::min(margin, std::fabs(z));
            if (margin > 1e-3) break;
        }

        std::vector<double> v(net.output_dim());
        for (auto& e : v) e = 2.0 * rng.next_double() - 1.0;
        const auto project = [&](std::span<const double> out) {
            double s = 0.0;
            for (std::size_t i = 0; i < out.size(); ++i) s += v[i] * out[i];
            return s;
        };

        MlpGrad grad = net.make_grad();
        auto dx = net.backward(tape, v, grad);
        if (corrupt && c == 0) grad.w[0][0] += 0.05;

        const auto record = [&](double analytic, double fd, const std::string& site) {
            ++rep.checks;
            const double rel =
                std::fabs(analytic - fd) /
                std::max({std::fabs(analytic), std::fabs(fd), 1e-4});
            if (rel > rep.max_rel_err) {
                rep.max_rel_err = rel;
                rep.worst_config = c;
                rep.worst_site = site;
                rep.worst_analytic = analytic;
                rep.worst_fd = fd;
            }
        };

        for (std::size_t p = 0; p < net.param_count(); ++p) {
            const double orig = net.get_param(p);
            net.set_param(p, orig + step);
            const double up = project(net.forward(x));
            net.set_param(p, orig - step);
            const double dn = project(net.forward(x));
            net.set_param(p, orig);
            record(net.grad_param(grad, p), (up - dn) / (2.0 * step),
                   "param " + std::to_string(p));
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double orig = x[i];
            x[i] = orig + step;
            const double up = project(net.forward(x));
            x[i] = orig - step;
            const double dn = project(net.forward(x));
            x[i] = orig;
            record(dx[i], (up - dn) / (2.0 * step), "input " + std::to_string(i));
        }
        ++rep.configs;
    }
    return rep;
}

}  // namespace evrec
