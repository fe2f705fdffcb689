#pragma once

#include <vector>

#include "grn/corpus.hpp"
#include "grn/tensor.hpp"
#include "grn/text_input.hpp"

namespace grn {

// State observed by the revision policy: the current poem plus the fixed
// episode conditioning.
struct EnvState {
  Quatrain poem;
  Conditioning cond;
  int step = 0;
  bool starts_at_goal = false;
};

struct StepResult {
  EnvState state;
  real reward = 0;
  bool done = false;
};

// Gym-style episodic environment. Action ids follow the policy's fixed
// action space: word positions 0..N-1, do-nothing at index `max_positions`.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual EnvState reset(Rng& rng) = 0;
  virtual StepResult step(const EnvState& state, int action, Rng& rng) = 0;
  virtual int max_positions() const = 0;  // do-nothing action index
  virtual int max_episode_len() const = 0;
};

// Recoverable per-episode failure (e.g. draft generation retries
// exhausted); the collector discards the episode and logs the cause.
struct EpisodeFault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ActResult {
  int action = 0;
  real log_prob = 0;
  real value = 0;
};

struct EvalResult {
  Value log_prob;  // differentiable log pi(a|s)
  Value value;     // differentiable V(s)
  Value entropy;   // entropy of the valid-action distribution
};

// Policy with a value head, as consumed by the on-policy trainers.
class PolicyModel {
 public:
  virtual ~PolicyModel() = default;
  virtual ActResult act(const EnvState& state, Rng& rng) = 0;
  virtual EvalResult evaluate(const EnvState& state, int action) = 0;
  virtual ParamSet& policy_params() = 0;
  virtual ParamSet& value_params() = 0;
  // Called after parameter updates (cache invalidation hooks).
  virtual void on_params_updated() {}
};

}  // namespace grn
