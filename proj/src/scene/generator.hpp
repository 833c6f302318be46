#pragma once

#include <cstdint>
#include <string>

#include "common/rng.hpp"
#include "scene/scene.hpp"

namespace jointpred::scene {

enum class ScenarioKind { straight, intersection_yield, merge, turn_multi_modal };

const char* scenario_kind_name(ScenarioKind k);
ScenarioKind scenario_kind_from_name(const std::string& name);

struct GeneratorParams {
  int64_t t_p = 20;  // past steps
  int64_t t = 30;    // future steps
  double dt = 0.1;
  // straight scenes honor this agent count when > 0 (used by the benchmark
  // harness to sweep N_a); other kinds keep their structural cast.
  int64_t n_agents_override = 0;
};

// Deterministic for a fixed (kind, seed, params). Tracks are kinematically
// smooth and ground-truth futures are pairwise collision-free by
// construction: lanes are spaced wider than the largest radius sum and
// crossing/merging agents are time-separated.
Scene generate_scene(ScenarioKind kind, uint64_t seed, const GeneratorParams& params = {});

}  // namespace jointpred::scene
