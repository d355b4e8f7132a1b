#include "mdphom/translation.hpp"

#include <algorithm>

#include "mdphom/errors.hpp"
#include "mdphom/rng.hpp"

namespace mdphom {

TranslationEnv::TranslationEnv(TranslationConfig config, std::vector<Tensor> train_images,
                               std::vector<Tensor> test_images)
    : config_(config), train_images_(std::move(train_images)), test_images_(std::move(test_images)) {
    if (train_images_.empty()) throw ConfigError("translation: no train images");
    if (config_.image_split == GoalSplit::test && test_images_.empty()) {
        throw ConfigError("translation: no test images");
    }
    const auto& shape = train_images_.front().shape;
    if (shape.size() != 3 || shape[0] != 1) {
        throw ConfigError("translation: images must be (1, h, w), got " + shape_str(shape));
    }
    for (const auto* set : {&train_images_, &test_images_})
        for (const Tensor& img : *set)
            if (img.shape != shape) throw ConfigError("translation: images differ in shape");
}

std::vector<std::size_t> TranslationEnv::observation_shape() const {
    return train_images_.front().shape;
}

Observation TranslationEnv::render(const Tensor& image, int dx, int dy) const {
    const std::size_t h = image.dim(1), w = image.dim(2);
    const int px = static_cast<int>(config_.translate_px);
    Observation obs{Tensor({1, h, w}), ObsKind::pixel};
    const int shift_x = dx * px, shift_y = dy * px;
    for (std::size_t r = 0; r < h; ++r) {
        const int src_r = static_cast<int>(r) - shift_y;
        if (src_r < 0 || src_r >= static_cast<int>(h)) continue;
        for (std::size_t c = 0; c < w; ++c) {
            const int src_c = static_cast<int>(c) - shift_x;
            if (src_c < 0 || src_c >= static_cast<int>(w)) continue;
            obs.data.data[r * w + c] = image.data[static_cast<std::size_t>(src_r) * w +
                                                  static_cast<std::size_t>(src_c)];
        }
    }
    return obs;
}

Observation TranslationEnv::observe() const {
    return render(*image_, dx_, dy_);
}

ResetResult TranslationEnv::reset(std::uint64_t seed) {
    Rng rng(seed);
    const auto& pool = config_.image_split == GoalSplit::train ? train_images_ : test_images_;
    image_index_ = rng.uniform_index(pool.size());
    image_ = &pool[image_index_];
    dx_ = 0;
    dy_ = 0;
    if (config_.goal_split == GoalSplit::train) {
        goal_dx_ = -3 + static_cast<int>(rng.uniform_index(3));  // -3..-1
    } else {
        goal_dx_ = 1 + static_cast<int>(rng.uniform_index(3));  // 1..3
    }
    goal_dy_ = -3 + static_cast<int>(rng.uniform_index(7));
    steps_ = 0;
    reached_ = false;
    active_ = true;
    ResetResult result;
    result.observation = observe();
    result.goal.goal_observation = render(*image_, goal_dx_, goal_dy_);
    return result;
}

EnvStep TranslationEnv::step(int action) {
    if (!active_) throw UsageError("translation: step after episode end");
    int dx = 0, dy = 0;
    switch (action) {
        case 0: dy = -1; break;
        case 1: dy = 1; break;
        case 2: dx = -1; break;
        case 3: dx = 1; break;
        default: throw UsageError("translation: unknown action " + std::to_string(action));
    }
    dx_ = std::clamp(dx_ + dx, -3, 3);
    dy_ = std::clamp(dy_ + dy, -3, 3);
    steps_ += 1;

    double reward = 0.0;
    if (dx_ == goal_dx_ && dy_ == goal_dy_) {
        reward = 1.0;
        reached_ = true;
        active_ = false;
    } else if (steps_ >= config_.step_cap) {
        active_ = false;
    }

    EnvStep result;
    result.next_observation = observe();
    result.reward = reward;
    result.done = !active_;
    result.info = {{"dx", static_cast<double>(dx_)},
                   {"dy", static_cast<double>(dy_)},
                   {"goal_dx", static_cast<double>(goal_dx_)},
                   {"goal_dy", static_cast<double>(goal_dy_)},
                   {"image", static_cast<double>(image_index_)},
                   {"steps", static_cast<double>(steps_)},
                   {"reached", reached_ ? 1.0 : 0.0}};
    return result;
}

std::vector<Tensor> make_sprites(std::size_t count, std::size_t size, std::uint64_t seed) {
    if (size < 16) throw ConfigError("sprites need at least a 16-pixel frame");
    Rng rng(seed);
    // keep all content inside a centered box so +-3 unit shifts never clip
    const std::size_t box = size / 3 + 1;
    const std::size_t lo = (size - box) / 2;
    std::vector<Tensor> sprites;
    sprites.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Tensor img({1, size, size});
        const std::size_t rects = 3 + rng.uniform_index(3);
        for (std::size_t r = 0; r < rects; ++r) {
            std::size_t x0 = lo + rng.uniform_index(box);
            std::size_t x1 = lo + rng.uniform_index(box);
            std::size_t y0 = lo + rng.uniform_index(box);
            std::size_t y1 = lo + rng.uniform_index(box);
            if (x0 > x1) std::swap(x0, x1);
            if (y0 > y1) std::swap(y0, y1);
            const double value = rng.uniform(0.4, 1.0);
            for (std::size_t y = y0; y <= y1; ++y)
                for (std::size_t x = x0; x <= x1; ++x)
                    img.data[y * size + x] = std::min(1.0, img.data[y * size + x] + value);
        }
        sprites.push_back(std::move(img));
    }
    return sprites;
}

}  // namespace mdphom
