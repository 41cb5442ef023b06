#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "evrec/common.hpp"
#include "evrec/rng.hpp"

namespace evrec {

// Gradient accumulator shaped like an Mlp's parameters.
struct MlpGrad {
    std::vector<std::vector<double>> w;
    std::vector<std::vector<double>> b;

    void zero() {
        for (auto& l : w) std::fill(l.begin(), l.end(), 0.0);
        for (auto& l : b) std::fill(l.begin(), l.end(), 0.0);
    }
};

// Dense multi-layer perceptron with a leaky-rectifier activation on hidden
// layers (optionally on the output too), 64-bit floats throughout. Weights
// are row-major (out x in); initialization is uniform in +-1/sqrt(fan_in).
class Mlp {
  public:
    // Scratch space for backpropagation: per-layer pre-activations and
    // post-activations (act[0] is the input).
    struct Tape {
        std::vector<std::vector<double>> pre;
        std::vector<std::vector<double>> act;
    };

    Mlp() = default;

    Mlp(std::vector<int> dims, RngStream& rng, bool activate_output = false, double slope = 0.01)
        : dims_(std::move(dims)), activate_output_(activate_output), slope_(slope) {
        if (dims_.size() < 2) throw ShapeError("mlp: need at least input and output dims");
        for (int d : dims_)
            if (d < 1) throw ShapeError("mlp: layer widths must be >= 1");
        for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
            const int in = dims_[l], out = dims_[l + 1];
            const double bound = 1.0 / std::sqrt(static_cast<double>(in));
            std::vector<double> wl(static_cast<std::size_t>(out) * in);
            for (auto& v : wl) v = (2.0 * rng.next_double() - 1.0) * bound;
            w_.push_back(std::move(wl));
            b_.push_back(std::vector<double>(out, 0.0));
        }
    }

    const std::vector<int>& dims() const { return dims_; }
    int input_dim() const { return dims_.front(); }
    int output_dim() const { return dims_.back(); }
    int layers() const { return static_cast<int>(w_.size()); }
    double slope() const { return slope_; }
    bool activate_output() const { return activate_output_; }

    std::vector<double> forward(std::span<const double> x) const {
        thread_local Tape tape;
        return forward(x, tape);
    }

    std::vector<double> forward(std::span<const double> x, Tape& tape) const {
        if (static_cast<int>(x.size()) != input_dim())
            throw ShapeError("mlp forward: input length mismatch");
        tape.pre.resize(w_.size());
        tape.act.resize(w_.size() + 1);
        tape.act[0].assign(x.begin(), x.end());
        for (std::size_t l = 0; l < w_.size(); ++l) {
            const int in = dims_[l], out = dims_[l + 1];
            const double* wl = w_[l].data();
            const double* a = tape.act[l].data();
            auto& pre = tape.pre[l];
            pre.assign(b_[l].begin(), b_[l].end());
            for (int o = 0; o < out; ++o)
                pre[o] += dot(wl + static_cast<std::size_t>(o) * in, a, in);
            const bool act = l + 1 < w_.size() || activate_output_;
            auto& post = tape.act[l + 1];
            post.resize(out);
            for (int o = 0; o < out; ++o)
                post[o] = act && pre[o] < 0.0 ? slope_ * pre[o] : pre[o];
        }
        return tape.act.back();
    }

    // Reverse-mode pass. `dout` is dL/d(output); parameter gradients are
    // accumulated into `grad` and dL/d(input) is returned.
    std::vector<double> backward(const Tape& tape, std::span<const double> dout,
                                 MlpGrad& grad) const {
        if (tape.act.size() != w_.size() + 1 ||
            static_cast<int>(tape.act[0].size()) != input_dim())
            throw ShapeError("mlp backward: tape does not match network");
        if (static_cast<int>(dout.size()) != output_dim())
            throw ShapeError("mlp backward: output-gradient length mismatch");
        std::vector<double> delta(dout.begin(), dout.end());
        for (int l = layers() - 1; l >= 0; --l) {
            const int in = dims_[l], out = dims_[l + 1];
            const bool act = l + 1 < layers() || activate_output_;
            if (act)
                for (int o = 0; o < out; ++o)
                    if (tape.pre[l][o] < 0.0) delta[o] *= slope_;
            const double* a = tape.act[l].data();
            double* gw = grad.w[l].data();
            for (int o = 0; o < out; ++o) {
                const double d = delta[o];
                grad.b[l][o] += d;
                double* row = gw + static_cast<std::size_t>(o) * in;
                for (int i = 0; i < in; ++i) row[i] += d * a[i];
            }
            std::vector<double> prev(in, 0.0);
            const double* wl = w_[l].data();
            for (int o = 0; o < out; ++o) {
                const double d = delta[o];
                const double* row = wl + static_cast<std::size_t>(o) * in;
                for (int i = 0; i < in; ++i) prev[i] += d * row[i];
            }
            delta = std::move(prev);
        }
        return delta;
    }

    MlpGrad make_grad() const {
        MlpGrad g;
        for (const auto& l : w_) g.w.push_back(std::vector<double>(l.size(), 0.0));
        for (const auto& l : b_) g.b.push_back(std::vector<double>(l.size(), 0.0));
        return g;
    }

    // params <- params - step * grad (plain SGD).
    void apply(const MlpGrad& grad, double step) {
        if (grad.w.size() != w_.size()) throw ShapeError("mlp apply: gradient shape mismatch");
        for (std::size_t l = 0; l < w_.size(); ++l) {
            if (grad.w[l].size() != w_[l].size() || grad.b[l].size() != b_[l].size())
                throw ShapeError("mlp apply: gradient shape mismatch");
            for (std::size_t i = 0; i < w_[l].size(); ++i) w_[l][i] -= step * grad.w[l][i];
            for (std::size_t i = 0; i < b_[l].size(); ++i) b_[l][i] -= step * grad.b[l][i];
        }
    }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& l : w_) n += l.size();
        for (const auto& l : b_) n += l.size();
        return n;
    }

    // Flat parameter view (weights layer by layer, then biases); used by the
    // finite-difference checks.
    double get_param(std::size_t i) const { return *param_ptr(i); }
    void set_param(std::size_t i, double v) { *const_cast<double*>(param_ptr(i)) = v; }

    double grad_param(const MlpGrad& g, std::size_t i) const {
        std::size_t off = i;
        for (std::size_t l = 0; l < g.w.size(); ++l) {
            if (off < g.w[l].size()) return g.w[l][off];
            off -= g.w[l].size();
        }
        for (std::size_t l = 0; l < g.b.size(); ++l) {
            if (off < g.b[l].size()) return g.b[l][off];
            off -= g.b[l].size();
        }
        throw ShapeError("mlp: parameter index out of range");
    }

    bool all_finite() const {
        for (const auto& l : w_)
            for (double v : l)
                if (!std::isfinite(v)) return false;
        for (const auto& l : b_)
            for (double v : l)
                if (!std::isfinite(v)) return false;
        return true;
    }

    bool operator==(const Mlp&) const = default;

    nlohmann::json to_json() const {
        nlohmann::json jw = nlohmann::json::array();
        nlohmann::json jb = nlohmann::json::array();
        for (std::size_t l = 0; l < w_.size(); ++l) {
            const int in = dims_[l], out = dims_[l + 1];
            nlohmann::json rows = nlohmann::json::array();
            for (int o = 0; o < out; ++o) {
                nlohmann::json row = nlohmann::json::array();
                for (int i = 0; i < in; ++i) row.push_back(w_[l][static_cast<std::size_t>(o) * in + i]);
                rows.push_back(std::move(row));
            }
            jw.push_back(std::move(rows));
            jb.push_back(b_[l]);
        }
        return {{"layer_dims", dims_},
                {"weights", std::move(jw)},
                {"biases", std::move(jb)},
                {"activate_output", activate_output_},
                {"slope", slope_}};
    }

    static Mlp from_json(const nlohmann::json& j) {
        Mlp m;
        try {
            m.dims_ = j.at("layer_dims").get<std::vector<int>>();
            m.activate_output_ = j.at("activate_output").get<bool>();
            m.slope_ = j.at("slope").get<double>();
            if (m.dims_.size() < 2) throw ShapeError("mlp load: bad layer_dims");
            const auto& jw = j.at("weights");
            const auto& jb = j.at("biases");
            if (jw.size() != m.dims_.size() - 1 || jb.size() != m.dims_.size() - 1)
                throw ShapeError("mlp load: layer count mismatch");
            for (std::size_t l = 0; l + 1 < m.dims_.size(); ++l) {
                const int in = m.dims_[l], out = m.dims_[l + 1];
                if (static_cast<int>(jw[l].size()) != out)
                    throw ShapeError("mlp load: weight row count mismatch");
                std::vector<double> wl;
                wl.reserve(static_cast<std::size_t>(out) * in);
                for (const auto& row : jw[l]) {
                    if (static_cast<int>(row.size()) != in)
                        throw ShapeError("mlp load: weight row length mismatch");
                    for (const auto& v : row) wl.push_back(v.get<double>());
                }
                m.w_.push_back(std::move(wl));
                auto bl = jb[l].get<std::vector<double>>();
                if (static_cast<int>(bl.size()) != out)
                    throw ShapeError("mlp load: bias length mismatch");
                m.b_.push_back(std::move(bl));
            }
        } catch (const nlohmann::json::exception& e) {
            throw ShapeError(std::string("mlp load: malformed json: ") + e.what());
        }
        if (!m.all_finite()) throw ShapeError("mlp load: non-finite parameter");
        return m;
    }

  private:
    // Eight independent accumulators give the compiler a vectorizable inner
    // product while keeping a fixed (hence reproducible) summation order; a
    // naive accumulation would serialize on the floating-point add chain.
    static double dot(const double* a, const double* b, int n) {
        double s0 = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0, s5 = 0, s6 = 0, s7 = 0;
        int i = 0;
        for (; i + 8 <= n; i += 8) {
            s0 += a[i] * b[i];
            s1 += a[i + 1] * b[i + 1];
            s2 += a[i + 2] * b[i + 2];
            s3 += a[i + 3] * b[i + 3];
            s4 += a[i + 4] * b[i + 4];
            s5 += a[i + 5] * b[i + 5];
            s6 += a[i + 6] * b[i + 6];
            s7 += a[i + 7] * b[i + 7];
        }
        double s = ((s0 + s1) + (s2 + s3)) + ((s4 + s5) + (s6 + s7));
        for (; i < n; ++i) s += a[i] * b[i];
        return s;
    }

    const double* param_ptr(std::size_t i) const {
        std::size_t off = i;
        for (std::size_t l = 0; l < w_.size(); ++l) {
            if (off < w_[l].size()) return &w_[l][off];
            off -= w_[l].size();
        }
        for (std::size_t l = 0; l < b_.size(); ++l) {
            if (off < b_[l].size()) return &b_[l][off];
            off -= b_[l].size();
        }
        throw ShapeError("mlp: parameter index out of range");
    }

    std::vector<int> dims_;
    std::vector<std::vector<double>> w_;
    std::vector<std::vector<double>> b_;
    bool activate_output_ = false;
    double slope_ = 0.01;
};

// Dueling combination: Q_a = V + A_a - mean(A). Shift-invariant in A, so the
// advantage stream cannot hide state value.
inline std::vector<double> dueling_combine(double v, std::span<const double> adv) {
    if (adv.empty()) throw ShapeError("dueling_combine: empty advantage vector");
    double mean = 0.0;
    for (double a : adv) mean += a;
    mean /= static_cast<double>(adv.size());
    std::vector<double> q(adv.size());
    for (std::size_t i = 0; i < adv.size(); ++i) q[i] = v + adv[i] - mean;
    return q;
}

}  // namespace evrec
