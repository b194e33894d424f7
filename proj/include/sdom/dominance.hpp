#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sdom/dataset.hpp"
#include "sdom/kde.hpp"
#include "sdom/sae.hpp"

namespace sdom {

// Collapsed per-trial series: one representative channel value per encoded
// time point.
struct RepresentativeSeries {
    std::vector<double> values;
    std::size_t trial_index = 0;
};

// Representative series of every trial of one class, stacked M x t.
struct ClassBatch {
    int label = 0;
    Matrix series;
    std::vector<std::size_t> trial_indices;
};

struct CurriculumSchedule {
    int t1 = 50;
    int t2 = 150;
    void validate() const;
};

enum class PsiMode { percentile, absolute };

// psi semantics: in percentile mode the top psi percent of each class is
// pinned to full dominance; in absolute mode any normalized score >= psi is.
struct ClampConfig {
    double psi = 90.0;
    PsiMode mode = PsiMode::percentile;
    void validate() const;
};

struct DominanceRecord {
    std::size_t trial_index = 0;
    int label = 0;
    double raw_score = 0.0;
    double clamped_score = 1.0;
    double curriculum_weight = 1.0; // weight at epoch 0, i.e. the clamped score
    bool is_dominant = true;
};

// Stage one: per encoded time point, the channel value of maximal density
// among the trial's channel values; density ties within 1e-12 are averaged.
std::vector<double> channel_wise_representative(const Representation& encoded,
                                                const KdeConfig& cfg);

// Stage two: per-sample mean self-density across encoded time points within
// a class batch (rows are samples). Needs at least 2 rows.
std::vector<double> sample_wise_scores(const Matrix& class_series, const KdeConfig& cfg);

// Normalizes by the maximum raw score and pins scores at or above the psi
// threshold to exactly 1. All-equal inputs degenerate to all ones.
std::vector<double> clamp_scores(std::span<const double> raw_scores, const ClampConfig& cfg);

// Linear ramp from the clamped score at t1 to full weight at t2.
double curriculum_weight(double clamped_score, int epoch, const CurriculumSchedule& sched);

std::vector<ClassBatch> collect_class_batches(const Dataset& ds, const SaeModel& sae,
                                              const KdeConfig& cfg);

// Full two-stage estimation; one record per trial in dataset order.
std::vector<DominanceRecord> estimate_all(const Dataset& ds, const SaeModel& sae,
                                          const KdeConfig& kde_cfg,
                                          const ClampConfig& clamp_cfg);

// Score report: trial_index,class,raw_score,clamped_score,is_dominant,provenance
void write_score_csv(const std::filesystem::path& path,
                     std::span<const DominanceRecord> records, const Dataset* ds = nullptr);

struct ScoreRow {
    std::size_t trial_index = 0;
    int label = 0;
    double raw_score = 0.0;
    double clamped_score = 1.0;
    bool is_dominant = true;
    std::string provenance; // empty when unknown
};

std::vector<ScoreRow> read_score_csv(const std::filesystem::path& path);

const char* provenance_name(Provenance p);

} // namespace sdom
