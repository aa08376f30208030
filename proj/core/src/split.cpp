#include "octcnn/split.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "octcnn/error.hpp"

namespace octcnn {

namespace {

struct PatientGroup {
    std::string patient_id;
    Label cls = Label::normal; // majority class; ties resolve to glaucoma
    std::vector<std::string> sample_ids;
};

/// Patients in first-appearance order (deterministic given the dataset).
std::vector<PatientGroup> group_by_patient(const Dataset& d) {
    std::vector<PatientGroup> groups;
    std::map<std::string, std::size_t> index;
    std::map<std::string, int> glaucoma_count;
    for (const auto& s : d.samples) {
        auto [it, inserted] = index.try_emplace(s.patient_id, groups.size());
        if (inserted) groups.push_back({s.patient_id, Label::normal, {}});
        groups[it->second].sample_ids.push_back(s.sample_id);
        if (s.label == Label::glaucoma) ++glaucoma_count[s.patient_id];
    }
    for (auto& g : groups) {
        const int n_g = glaucoma_count[g.patient_id];
        const int n_total = static_cast<int>(g.sample_ids.size());
        g.cls = 2 * n_g >= n_total ? Label::glaucoma : Label::normal;
    }
    return groups;
}

std::vector<PatientGroup*> of_class(std::vector<PatientGroup>& groups, Label cls) {
    std::vector<PatientGroup*> out;
    for (auto& g : groups)
        if (g.cls == cls) out.push_back(&g);
    return out;
}

} // namespace

SplitPlan split_train_test(const Dataset& d, double test_fraction, SeededRng& rng) {
    if (test_fraction <= 0.0 || test_fraction >= 1.0)
        throw ConfigError("test_fraction must be in (0,1), got " + std::to_string(test_fraction));
    auto groups = group_by_patient(d);

    SplitPlan plan;
    for (Label cls : {Label::glaucoma, Label::normal}) {
        auto patients = of_class(groups, cls);
        if (patients.size() < 2)
            throw DataError(std::string("split_train_test: need at least 2 patients of class '") +
                            label_name(cls) + "', got " + std::to_string(patients.size()));
        long class_samples = 0;
        for (const auto* p : patients) class_samples += static_cast<long>(p->sample_ids.size());
        const long target = std::lround(test_fraction * static_cast<double>(class_samples));

        rng.shuffle(patients);
        long in_test = 0;
        for (const auto* p : patients) {
            const long sz = static_cast<long>(p->sample_ids.size());
            // take the whole patient only if that brings the test count
            // strictly closer to the target
            const bool take = std::labs(in_test + sz - target) < std::labs(in_test - target);
            auto& side = take ? plan.test_ids : plan.train_ids;
            side.insert(side.end(), p->sample_ids.begin(), p->sample_ids.end());
            if (take) in_test += sz;
        }
        if (in_test == 0 || in_test == class_samples)
            throw DataError(std::string("split_train_test: class '") + label_name(cls) +
                            "' cannot be split at the patient level (one side would be empty)");
        plan.achieved_test_fraction[static_cast<int>(cls)] =
            static_cast<double>(in_test) / static_cast<double>(class_samples);
    }
    return plan;
}

std::vector<Fold> make_icv_folds(const Dataset& train, int k, SeededRng& rng) {
    if (k < 2) throw ConfigError("make_icv_folds: k must be >= 2, got " + std::to_string(k));
    auto groups = group_by_patient(train);

    std::vector<std::vector<std::string>> fold_ids(static_cast<std::size_t>(k));
    for (Label cls : {Label::glaucoma, Label::normal}) {
        auto patients = of_class(groups, cls);
        if (static_cast<int>(patients.size()) < k)
            throw DataError(std::string("make_icv_folds: need at least ") + std::to_string(k) +
                            " patients of class '" + label_name(cls) + "', got " +
                            std::to_string(patients.size()));
        rng.shuffle(patients);
        std::vector<long> load(static_cast<std::size_t>(k), 0);
        for (const auto* p : patients) {
            // lightest fold for this class; ties to the lowest index
            std::size_t best = 0;
            for (std::size_t f = 1; f < load.size(); ++f)
                if (load[f] < load[best]) best = f;
            fold_ids[best].insert(fold_ids[best].end(), p->sample_ids.begin(),
                                  p->sample_ids.end());
            load[best] += static_cast<long>(p->sample_ids.size());
        }
    }

    std::vector<Fold> folds(static_cast<std::size_t>(k));
    for (std::size_t f = 0; f < folds.size(); ++f) {
        folds[f].val_ids = fold_ids[f];
        for (std::size_t o = 0; o < folds.size(); ++o) {
            if (o == f) continue;
            folds[f].train_ids.insert(folds[f].train_ids.end(), fold_ids[o].begin(),
                                      fold_ids[o].end());
        }
    }
    return folds;
}

} // namespace octcnn
