#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

namespace mrverb {

/// Word budget per batch: start, start*compound, start*compound^2, ... capped at stop.
class CompoundingSchedule {
public:
    CompoundingSchedule(double start, double stop, double compound)
        : current_(start), stop_(stop), compound_(compound) {}

    double next() {
        double out = clip(current_);
        current_ *= compound_;
        return out;
    }

    double peek() const { return clip(current_); }

private:
    double clip(double v) const { return compound_ >= 1.0 ? std::min(v, stop_) : std::max(v, stop_); }

    double current_;
    double stop_;
    double compound_;
};

/// Groups sentences (by word count) into batches whose word total stays within the current
/// budget; a sentence longer than the budget forms a batch on its own. Sentences are visited in a
/// fresh seeded shuffle each epoch.
class WordBatcher {
public:
    WordBatcher(std::vector<std::size_t> lengths, CompoundingSchedule schedule, std::uint64_t seed)
        : lengths_(std::move(lengths)), schedule_(schedule), rng_(seed) {
        order_.resize(lengths_.size());
        reshuffle();
    }

    std::vector<std::size_t> next_batch() {
        const auto budget = static_cast<std::size_t>(std::floor(schedule_.next()));
        std::vector<std::size_t> batch;
        std::size_t words = 0;
        while (true) {
            if (pos_ == order_.size()) {
                if (!batch.empty()) break;
                reshuffle();
            }
            std::size_t idx = order_[pos_];
            if (!batch.empty() && words + lengths_[idx] > budget) break;
            batch.push_back(idx);
            words += lengths_[idx];
            ++pos_;
            if (words >= budget) break;
        }
        return batch;
    }

    std::size_t epoch() const { return epoch_; }

private:
    void reshuffle() {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::shuffle(order_.begin(), order_.end(), rng_);
        pos_ = 0;
        ++epoch_;
    }

    std::vector<std::size_t> lengths_;
    CompoundingSchedule schedule_;
    std::mt19937_64 rng_;
    std::vector<std::size_t> order_;
    std::size_t pos_ = 0;
    std::size_t epoch_ = 0;
};

}  // namespace mrverb
