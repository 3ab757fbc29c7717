#include "pansharp/optim.hpp"

#include <cmath>

namespace pansharp {

template <class T>
AdamState<T> AdamState<T>::for_parameters(const ParameterList<T>& params, AdamHyper hyper) {
    AdamState state;
    state.hyper = hyper;
    for (const auto& [name, p] : params) {
        state.first_moment.emplace_back(p.shape(), T{0});
        state.second_moment.emplace_back(p.shape(), T{0});
    }
    return state;
}

template <class T>
void adam_step(ParameterList<T>& params, AdamState<T>& state, double learning_rate) {
    if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
        throw ContractError("adam_step: optimizer state holds " + std::to_string(state.first_moment.size()) +
                            " blocks but " + std::to_string(params.size()) + " parameters were given");
    }
    for (std::size_t k = 0; k < params.size(); ++k) {
        if (state.first_moment[k].shape() != params[k].second.shape() ||
            state.second_moment[k].shape() != params[k].second.shape()) {
            throw DimensionError("adam_step: state shape " + shape_string(state.first_moment[k].shape()) +
                                 " does not match parameter '" + params[k].first + "' " +
                                 shape_string(params[k].second.shape()));
        }
    }
    ++state.step;
    const auto& h = state.hyper;
    const double correction1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
    const double correction2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = params[k].second;
        auto value = p.mutable_value().data();
        auto m = state.first_moment[k].data();
        auto v = state.second_moment[k].data();
        const bool has_grad = p.has_grad();
        for (std::size_t i = 0; i < value.size(); ++i) {
            const double g = has_grad ? static_cast<double>(p.grad()[i]) : 0.0;
            const double mi = h.beta1 * static_cast<double>(m[i]) + (1.0 - h.beta1) * g;
            const double vi = h.beta2 * static_cast<double>(v[i]) + (1.0 - h.beta2) * g * g;
            m[i] = static_cast<T>(mi);
            v[i] = static_cast<T>(vi);
            const double m_hat = mi / correction1;
            const double v_hat = vi / correction2;
            value[i] = static_cast<T>(static_cast<double>(value[i]) -
                                      learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon));
        }
    }
}

template struct AdamState<float>;
template struct AdamState<double>;
template void adam_step<float>(ParameterList<float>&, AdamState<float>&, double);
template void adam_step<double>(ParameterList<double>&, AdamState<double>&, double);

}  // namespace pansharp
