#pragma once

#include <cstdint>

#include "mdphom/env.hpp"
#include "mdphom/gridworld.hpp"  // GoalSplit

namespace mdphom {

/// Image translation task: a (1, size, size) image is shifted on a 7x7 grid
/// of offsets in [-3, 3]^2, starting from (0, 0). The goal is a translated
/// rendering of the same image; reaching the goal offset gives +1 and ends
/// the episode. Train goals have negative x-offset, test goals positive.
///
/// Actions: 0 = up, 1 = down, 2 = left, 3 = right (clamped at +-3).
struct TranslationConfig {
    std::size_t step_cap = 100;
    GoalSplit goal_split = GoalSplit::train;
    GoalSplit image_split = GoalSplit::train;
    std::size_t translate_px = 3;  // pixels moved per offset unit
};

class TranslationEnv : public Environment {
public:
    /// Each image is a (1, h, w) tensor with values in [0, 1].
    TranslationEnv(TranslationConfig config, std::vector<Tensor> train_images,
                   std::vector<Tensor> test_images);

    ResetResult reset(std::uint64_t seed) override;
    EnvStep step(int action) override;

    int num_actions() const override { return 4; }
    std::vector<std::size_t> observation_shape() const override;
    std::size_t episode_cap() const override { return config_.step_cap; }
    bool episode_active() const override { return active_; }
    std::string id() const override { return "translation"; }

    Observation render(const Tensor& image, int dx, int dy) const;

private:
    Observation observe() const;

    TranslationConfig config_;
    std::vector<Tensor> train_images_;
    std::vector<Tensor> test_images_;
    const Tensor* image_ = nullptr;
    std::size_t image_index_ = 0;
    int dx_ = 0, dy_ = 0;
    int goal_dx_ = 0, goal_dy_ = 0;
    std::size_t steps_ = 0;
    bool reached_ = false;
    bool active_ = false;
};

/// Procedural sprite set for running the task without an external dataset.
/// Sprites are rectangle compositions confined to the central region so every
/// offset in [-3, 3]^2 keeps all content inside the frame.
std::vector<Tensor> make_sprites(std::size_t count, std::size_t size, std::uint64_t seed);

}  // namespace mdphom
