#pragma once

// Shared finite-difference gradient oracle. Fourth-order central stencil keeps
// the truncation error orders of magnitude below the 1e-3 acceptance bound;
// the relative error uses a 1e-7 magnitude floor so the comparison stays
// meaningful where the true gradient underflows the stencil noise (~1e-11).

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pcglab/model.hpp"

namespace gradcheck {

struct Result {
    double worst_rel = 0.0;
    std::string worst_tensor;
    size_t worst_index = 0;
};

template <typename LossFn>
Result run(pcglab::ModelParams<double>& params, pcglab::ModelParams<double>& grads,
           LossFn&& loss_of) {
    std::vector<std::vector<double>*> pt, gt;
    std::vector<std::string> names;
    for_each_tensor(params, [&](const std::string& n, std::vector<double>& t) {
        pt.push_back(&t);
        names.push_back(n);
    });
    for_each_tensor(grads, [&](const std::string&, std::vector<double>& t) { gt.push_back(&t); });

    Result res;
    for (size_t ti = 0; ti < pt.size(); ++ti) {
        auto& tensor = *pt[ti];
        for (size_t j = 0; j < tensor.size(); ++j) {
            const double orig = tensor[j];
            const double h = 1e-4 * (1.0 + std::abs(orig));
            auto eval = [&](double x) {
                tensor[j] = x;
                return loss_of();
            };
            const double f_p2 = eval(orig + 2 * h);
            const double f_p1 = eval(orig + h);
            const double f_m1 = eval(orig - h);
            const double f_m2 = eval(orig - 2 * h);
            tensor[j] = orig;
            const double fd = (-f_p2 + 8 * f_p1 - 8 * f_m1 + f_m2) / (12 * h);
            const double an = (*gt[ti])[j];
            const double rel =
                std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-7});
            if (rel > res.worst_rel) {
                res.worst_rel = rel;
                res.worst_tensor = names[ti];
                res.worst_index = j;
            }
        }
    }
    return res;
}

} // namespace gradcheck
