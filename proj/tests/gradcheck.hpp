#pragma once

// Central finite-difference gradient check of the full contrastive loss,
// shared by the unit suite and the acceptance suite. Returns the worst
// relative error over `points` random differentiable parameter points.

#include <cmath>
#include <vector>

#include "kgf/model.hpp"
#include "kgf/rng.hpp"

namespace kgf::test {

inline double gradcheck_worst_error(Scorer scorer, LossKind kind, int points,
                                    std::uint64_t seed) {
    constexpr std::uint32_t d = 6;
    constexpr std::uint32_t k = 3;
    constexpr double step = 1e-5;
    constexpr double gamma = 1.0;

    struct Point {
        std::vector<double> params;  // (3 + k) rows of d
        double* h() { return params.data(); }
        double* r() { return params.data() + d; }
        double* t() { return params.data() + 2 * d; }
        double* neg(std::uint32_t i) { return params.data() + (3 + i) * d; }
    };

    auto loss_of = [&](Point& p) {
        double sp = score_kernel(scorer, p.h(), p.r(), p.t(), d);
        std::vector<double> sn(k);
        for (std::uint32_t i = 0; i < k; ++i)
            sn[i] = score_kernel(scorer, p.h(), p.r(), p.neg(i), d);
        return contrastive_loss<double>(kind, gamma, sp, sn, nullptr, nullptr);
    };

    Rng rng(seed);
    double worst = 0;
    int checked = 0;
    while (checked < points) {
        Point p;
        p.params.resize((3 + k) * d);
        for (double& x : p.params) x = rng.uniform(-1.5, 1.5);

        // only check where the loss is differentiable: away from hinge
        // kinks and vanishing translational norms
        double sp = score_kernel(scorer, p.h(), p.r(), p.t(), d);
        bool skip = false;
        for (std::uint32_t i = 0; i < k; ++i) {
            double sn = score_kernel(scorer, p.h(), p.r(), p.neg(i), d);
            if (kind == LossKind::MarginRanking &&
                std::abs(gamma - sp + sn) < 1e-3)
                skip = true;
            if (scorer == Scorer::Translational && -sn < 1e-3) skip = true;
        }
        if (scorer == Scorer::Translational && -sp < 1e-3) skip = true;
        if (skip) continue;

        std::vector<double> ga(p.params.size(), 0.0);
        {
            std::vector<double> sn(k);
            for (std::uint32_t i = 0; i < k; ++i)
                sn[i] = score_kernel(scorer, p.h(), p.r(), p.neg(i), d);
            double d_pos = 0;
            std::vector<double> d_neg(k);
            contrastive_loss<double>(kind, gamma, sp, sn, &d_pos, d_neg.data());
            accumulate_score_gradient(scorer, p.h(), p.r(), p.t(), d, d_pos,
                                      ga.data(), ga.data() + d, ga.data() + 2 * d);
            for (std::uint32_t i = 0; i < k; ++i)
                accumulate_score_gradient(scorer, p.h(), p.r(), p.neg(i), d,
                                          d_neg[i], ga.data(), ga.data() + d,
                                          ga.data() + (3 + i) * d);
        }

        double num = 0, den_a = 0, den_f = 0;
        for (std::size_t i = 0; i < p.params.size(); ++i) {
            double orig = p.params[i];
            p.params[i] = orig + step;
            double up = loss_of(p);
            p.params[i] = orig - step;
            double down = loss_of(p);
            p.params[i] = orig;
            double gf = (up - down) / (2 * step);
            num += (ga[i] - gf) * (ga[i] - gf);
            den_a += ga[i] * ga[i];
            den_f += gf * gf;
        }
        double rel =
            std::sqrt(num) / std::max({std::sqrt(den_a), std::sqrt(den_f), 1e-10});
        worst = std::max(worst, rel);
        ++checked;
    }
    return worst;
}

}  // namespace kgf::test
