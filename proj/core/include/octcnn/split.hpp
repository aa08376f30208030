#pragma once

#include <string>
#include <vector>

#include "octcnn/dataset.hpp"
#include "octcnn/rng.hpp"

namespace octcnn {

struct Fold {
    std::vector<std::string> train_ids;
    std::vector<std::string> val_ids;
};

struct SplitPlan {
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    std::vector<Fold> folds;
    double achieved_test_fraction[2] = {0.0, 0.0}; // [glaucoma, normal]
};

/// Class-stratified, patient-grouped train/test split. Patients are
/// shuffled per class and greedily packed into the test side while that
/// brings its sample count closer to round(test_fraction * class size); no
/// patient ever spans both sides. Throws DataError when fewer than two
/// patients exist for a class or when a side would end up without one of
/// the classes.
SplitPlan split_train_test(const Dataset& d, double test_fraction, SeededRng& rng);

/// Patient-grouped, class-stratified k folds over a training set: per
/// class, shuffled patients go one by one to the currently lightest fold.
/// Validation sets are pairwise disjoint and union to the input set.
/// Requires k >= 2 and at least k patients per class.
std::vector<Fold> make_icv_folds(const Dataset& train, int k, SeededRng& rng);

} // namespace octcnn
