#include "sdom/dominance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace sdom {

void CurriculumSchedule::validate() const {
    if (t1 < 0 || t1 >= t2) {
        throw std::invalid_argument("curriculum: need 0 <= t1 < t2, got t1=" +
                                    std::to_string(t1) + " t2=" + std::to_string(t2));
    }
}

void ClampConfig::validate() const {
    if (mode == PsiMode::percentile) {
        if (!(psi > 0.0 && psi < 100.0)) {
            throw std::invalid_argument("clamp: percentile psi must be in (0, 100)");
        }
    } else {
        if (!(psi > 0.0 && psi <= 1.0)) {
            throw std::invalid_argument("clamp: absolute psi must be in (0, 1]");
        }
    }
}

std::vector<double> channel_wise_representative(const Representation& encoded,
                                                const KdeConfig& cfg) {
    const std::size_t c = encoded.rows();
    const std::size_t t = encoded.cols();
    if (c == 0 || t == 0) {
        throw std::invalid_argument("channel_wise_representative: empty representation");
    }
    std::vector<double> out(t);
    std::vector<double> column(c);
    for (std::size_t j = 0; j < t; ++j) {
        for (std::size_t ch = 0; ch < c; ++ch) column[ch] = encoded(ch, j);
        const std::vector<double> densities = density_at_points(column, cfg);
        const double max_density = *std::max_element(densities.begin(), densities.end());
        double sum = 0.0;
        std::size_t ties = 0;
        for (std::size_t ch = 0; ch < c; ++ch) {
            if (densities[ch] >= max_density - 1e-12) {
                sum += column[ch];
                ++ties;
            }
        }
        out[j] = sum / static_cast<double>(ties);
    }
    return out;
}

std::vector<double> sample_wise_scores(const Matrix& class_series, const KdeConfig& cfg) {
    const std::size_t m = class_series.rows();
    const std::size_t t = class_series.cols();
    if (m < 2) {
        throw std::invalid_argument("sample_wise_scores: need at least 2 samples, got " +
                                    std::to_string(m));
    }
    std::vector<double> scores(m, 0.0);
    std::vector<double> column(m);
    for (std::size_t j = 0; j < t; ++j) {
        for (std::size_t i = 0; i < m; ++i) column[i] = class_series(i, j);
        const std::vector<double> densities = density_at_points(column, cfg);
        for (std::size_t i = 0; i < m; ++i) scores[i] += densities[i];
    }
    for (double& s : scores) s /= static_cast<double>(t);
    return scores;
}

std::vector<double> clamp_scores(std::span<const double> raw_scores, const ClampConfig& cfg) {
    cfg.validate();
    if (raw_scores.empty()) throw std::invalid_argument("clamp_scores: empty score list");
    for (double s : raw_scores) {
        if (!std::isfinite(s)) throw std::invalid_argument("clamp_scores: non-finite raw score");
    }

    const auto [min_it, max_it] = std::minmax_element(raw_scores.begin(), raw_scores.end());
    if (*min_it == *max_it) {
        // degenerate: indistinguishable samples are all fully dominant
        return std::vector<double>(raw_scores.size(), 1.0);
    }

    const double max_raw = *max_it;
    std::vector<double> normalized(raw_scores.size());
    for (std::size_t i = 0; i < raw_scores.size(); ++i) normalized[i] = raw_scores[i] / max_raw;

    double threshold;
    if (cfg.mode == PsiMode::percentile) {
        // nearest-rank percentile of the normalized scores at (100 - psi)
        std::vector<double> sorted = normalized;
        std::sort(sorted.begin(), sorted.end());
        const double p = 100.0 - cfg.psi;
        std::size_t rank = static_cast<std::size_t>(
            std::ceil(p / 100.0 * static_cast<double>(sorted.size())));
        rank = std::clamp<std::size_t>(rank, 1, sorted.size());
        threshold = sorted[rank - 1];
    } else {
        threshold = cfg.psi;
    }

    std::vector<double> clamped(normalized.size());
    for (std::size_t i = 0; i < normalized.size(); ++i) {
        clamped[i] = normalized[i] >= threshold ? 1.0 : normalized[i];
    }
    return clamped;
}

double curriculum_weight(double clamped_score, int epoch, const CurriculumSchedule& sched) {
    sched.validate();
    if (epoch < sched.t1) return clamped_score;
    if (epoch > sched.t2) return 1.0;
    const double progress =
        static_cast<double>(epoch - sched.t1) / static_cast<double>(sched.t2 - sched.t1);
    return clamped_score + (1.0 - clamped_score) * progress;
}

std::vector<ClassBatch> collect_class_batches(const Dataset& ds, const SaeModel& sae,
                                              const KdeConfig& cfg) {
    ds.validate();
    std::vector<RepresentativeSeries> reps(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const Representation encoded = encode(sae, ds.trials[i]);
        reps[i] = {channel_wise_representative(encoded, cfg), i};
    }
    const std::size_t t = reps.front().values.size();

    std::vector<ClassBatch> batches(static_cast<std::size_t>(ds.num_classes));
    std::vector<std::vector<std::size_t>> members(batches.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        members[static_cast<std::size_t>(ds.trials[i].label)].push_back(i);
    }
    for (std::size_t label = 0; label < batches.size(); ++label) {
        if (members[label].size() < 2) {
            throw std::invalid_argument("estimate_all: class " + std::to_string(label) + " has " +
                                        std::to_string(members[label].size()) +
                                        " trials; sample-wise estimation needs at least 2");
        }
        ClassBatch& batch = batches[label];
        batch.label = static_cast<int>(label);
        batch.trial_indices = members[label];
        batch.series = Matrix(members[label].size(), t);
        for (std::size_t r = 0; r < members[label].size(); ++r) {
            const auto& values = reps[members[label][r]].values;
            for (std::size_t j = 0; j < t; ++j) batch.series(r, j) = values[j];
        }
    }
    return batches;
}

std::vector<DominanceRecord> estimate_all(const Dataset& ds, const SaeModel& sae,
                                          const KdeConfig& kde_cfg,
                                          const ClampConfig& clamp_cfg) {
    const std::vector<ClassBatch> batches = collect_class_batches(ds, sae, kde_cfg);
    std::vector<DominanceRecord> records(ds.size());
    for (const ClassBatch& batch : batches) {
        const std::vector<double> raw = sample_wise_scores(batch.series, kde_cfg);
        const std::vector<double> clamped = clamp_scores(raw, clamp_cfg);
        for (std::size_t r = 0; r < batch.trial_indices.size(); ++r) {
            DominanceRecord& rec = records[batch.trial_indices[r]];
            rec.trial_index = batch.trial_indices[r];
            rec.label = batch.label;
            rec.raw_score = raw[r];
            rec.clamped_score = clamped[r];
            rec.curriculum_weight = clamped[r];
            rec.is_dominant = clamped[r] == 1.0;
        }
    }
    return records;
}

const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::clean: return "clean";
        case Provenance::outlier: return "outlier";
        case Provenance::label_noise: return "label_noise";
    }
    return "unknown";
}

void write_score_csv(const std::filesystem::path& path,
                     std::span<const DominanceRecord> records, const Dataset* ds) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("write_score_csv: cannot open " + path.string());
    out << "trial_index,class,raw_score,clamped_score,is_dominant,provenance\n";
    char buf[64];
    for (const DominanceRecord& rec : records) {
        const char* prov = "";
        if (ds != nullptr && ds->has_provenance() && rec.trial_index < ds->provenance.size()) {
            prov = provenance_name(ds->provenance[rec.trial_index]);
        }
        out << rec.trial_index << ',' << rec.label << ',';
        std::snprintf(buf, sizeof buf, "%.17g", rec.raw_score);
        out << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", rec.clamped_score);
        out << buf << ',' << (rec.is_dominant ? 1 : 0) << ',' << prov << '\n';
    }
    if (!out) throw std::runtime_error("write_score_csv: write failed for " + path.string());
}

std::vector<ScoreRow> read_score_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_score_csv: cannot open " + path.string());
    std::vector<ScoreRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("trial_index", 0) == 0) continue;

        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> fields;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (line.back() == ',') fields.push_back("");
        if (fields.size() != 6) {
            throw std::runtime_error("score csv parse error at line " + std::to_string(line_no) +
                                     ": expected 6 columns, got " + std::to_string(fields.size()));
        }
        try {
            ScoreRow row;
            row.trial_index = static_cast<std::size_t>(std::stoull(fields[0]));
            row.label = std::stoi(fields[1]);
            row.raw_score = std::stod(fields[2]);
            row.clamped_score = std::stod(fields[3]);
            row.is_dominant = std::stoi(fields[4]) != 0;
            row.provenance = fields[5];
            rows.push_back(std::move(row));
        } catch (const std::exception&) {
            throw std::runtime_error("score csv parse error at line " + std::to_string(line_no) +
                                     ": malformed field");
        }
    }
    return rows;
}

} // namespace sdom
