#pragma once

#include <string>
#include <vector>

#include "rlqt/controller.hpp"
#include "rlqt/plant.hpp"
#include "rlqt/synthesis.hpp"

namespace rlqt {

/// How the observer gain is obtained.
struct ObserverSpec {
  enum class Method { care, place } method = Method::place;
  Mat W;                       // process weight (care)
  Mat V;                       // measurement weight (care)
  std::vector<Complex> poles;  // target spectrum (place)
};

struct DesignSpec {
  LinearPlant plant;  // linearization without performance output
  Mat Q;              // tracking weight, p1 x p1
  Mat R;              // input weight, m x m
  ObserverSpec observer;
  double gamma = 0.5;
  HinfOptions hinf;
};

/// Every intermediate of the α-independent design.
struct Design {
  LinearPlant plant;  // with C1, D12 from (Q, R)
  LqtDesign lqt;
  ObserverDesign observer;
  GeneralizedPlant augmented;
  FilterQ filter;

  TrackingController controller(double alpha) const {
    return assemble_controller(lqt, observer, FilterQAlpha{filter, alpha}, plant);
  }
};

/// linearization → LQT → observer → augmented plant → H∞ filter. Failures are
/// rethrown as SynthesisError naming the stage.
inline Design run_design(const DesignSpec& spec) {
  Design d;
  auto stage = [](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const SynthesisError&) {
      throw;
    } catch (const Error& e) {
      throw SynthesisError(name, e.what());
    }
  };
  d.plant = stage("plant", [&] {
    LinearPlant lp = with_performance_weights(spec.plant, spec.Q, spec.R);
    lp.validate();
    return lp;
  });
  d.lqt = stage("lqt", [&] { return design_lqt(d.plant, spec.Q, spec.R); });
  d.observer = stage("observer", [&] {
    return spec.observer.method == ObserverSpec::Method::care
               ? design_observer(d.plant, spec.observer.W, spec.observer.V)
               : place_observer(d.plant, spec.observer.poles);
  });
  d.augmented = stage("augmented", [&] { return build_augmented_plant(d.plant, d.lqt, d.observer); });
  d.filter = stage("hinf", [&] { return synthesize_qfilter(d.augmented, spec.gamma, spec.hinf); });
  return d;
}

/// Observer targets used by the shipped pendulum configuration.
inline std::vector<Complex> default_pendulum_observer_poles() {
  return {{-59.40, 80.54}, {-59.40, -80.54}, {-61.04, 76.24}, {-61.04, -76.24}};
}

/// The pendulum design with the shipped defaults (Q = 225, R = 2, placed observer).
inline DesignSpec default_pendulum_design_spec(double gamma = 0.5) {
  DesignSpec s;
  s.plant = pendulum_linearize(PendulumParams{});
  s.Q = Mat::Constant(1, 1, 225.0);
  s.R = Mat::Constant(1, 1, 2.0);
  s.observer.method = ObserverSpec::Method::place;
  s.observer.poles = default_pendulum_observer_poles();
  s.gamma = gamma;
  return s;
}

}  // namespace rlqt
