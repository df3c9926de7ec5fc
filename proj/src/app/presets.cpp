#include "refdiff/app/presets.hpp"

#include "refdiff/errors.hpp"

namespace refdiff::app {

namespace {

RunSpec two_barrier_rbm(double mu, double r0, double rb) {
    RunSpec spec;
    spec.model = {ConstantDrift{mu}, ConstantSq{1.0}, TwoBarrier{1.0}};
    spec.functional = {ZeroCost{}, r0, rb};
    spec.outputs = {Output::Alpha, Output::Eta2, Output::Density, Output::UPrime, Output::Psi, Output::Rate};
    McConfig mc;
    mc.dt = 1e-4;
    mc.horizon_t = 1000.0;
    mc.replications = 200;
    spec.mc = mc;
    return spec;
}

}  // namespace

std::vector<std::string> preset_names() { return {"rbm-zero-drift", "rbm-drift", "rou", "zhang-case"}; }

RunSpec preset(std::string_view name) {
    if (name == "rbm-zero-drift") return two_barrier_rbm(0.0, 1.0, 1.0);
    if (name == "rbm-drift") return two_barrier_rbm(1.0, 1.0, 1.0);
    if (name == "rou") {
        auto spec = two_barrier_rbm(0.0, 1.0, 1.0);
        spec.model.mu = OuDrift{1.0, 0.5};
        return spec;
    }
    if (name == "zhang-case") {
        // Only the upper barrier is charged; ψ has a closed form here.
        auto spec = two_barrier_rbm(1.0, 0.0, 1.0);
        spec.mc->horizon_t = 50.0;
        spec.mc->replications = 10000;
        spec.cgf_thetas = {-0.5};
        return spec;
    }
    throw ValidationError("unknown preset '" + std::string(name) + "'");
}

}  // namespace refdiff::app
