#include "sdom/dataset_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdom {

namespace {

constexpr std::array<char, 4> kMagic = {'S', 'D', 'O', 'M'};
constexpr std::uint8_t kProvenanceUnknown = 255;

class ByteWriter {
public:
    explicit ByteWriter(std::ostream& out) : out_(out) {}

    void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
    void u16(std::uint16_t v) {
        for (int i = 0; i < 2; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(bits >> (8 * i)));
    }

private:
    std::ostream& out_;
};

class ByteReader {
public:
    explicit ByteReader(std::istream& in) : in_(in) {}

    std::size_t offset() const { return offset_; }

    std::uint8_t u8() {
        const int c = in_.get();
        if (c == std::char_traits<char>::eof()) {
            throw std::runtime_error("dataset parse error at byte " + std::to_string(offset_) +
                                     ": unexpected end of file");
        }
        ++offset_;
        return static_cast<std::uint8_t>(c);
    }
    std::uint16_t u16() {
        std::uint16_t v = 0;
        for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(u8()) << (8 * i);
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
        return v;
    }
    double f64() {
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(u8()) << (8 * i);
        return std::bit_cast<double>(bits);
    }

    bool at_eof() { return in_.peek() == std::char_traits<char>::eof(); }

private:
    std::istream& in_;
    std::size_t offset_ = 0;
};

} // namespace

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
    ds.validate();
    if (ds.num_classes > 255) {
        throw std::invalid_argument("save_dataset: label byte limits num_classes to 255");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("save_dataset: cannot open " + path.string());

    ByteWriter w(out);
    for (char m : kMagic) w.u8(static_cast<std::uint8_t>(m));
    w.u16(kDatasetFormatVersion);
    w.u32(static_cast<std::uint32_t>(ds.channels()));
    w.u32(static_cast<std::uint32_t>(ds.time_points()));
    w.u32(static_cast<std::uint32_t>(ds.size()));
    w.u32(static_cast<std::uint32_t>(ds.num_classes));
    w.f64(ds.sample_rate_hz);

    for (std::size_t i = 0; i < ds.size(); ++i) {
        const Trial& trial = ds.trials[i];
        w.u8(static_cast<std::uint8_t>(trial.label));
        w.u8(ds.has_provenance() ? static_cast<std::uint8_t>(ds.provenance[i])
                                 : kProvenanceUnknown);
        for (std::size_t k = 0; k < trial.signal.size(); ++k) w.f64(trial.signal.data()[k]);
    }
    if (!out) throw std::runtime_error("save_dataset: write failed for " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_dataset: cannot open " + path.string());
    ByteReader r(in);

    for (char m : kMagic) {
        if (r.u8() != static_cast<std::uint8_t>(m)) {
            throw std::runtime_error("dataset parse error at byte " +
                                     std::to_string(r.offset() - 1) + ": bad magic, not an SDOM file");
        }
    }
    const std::uint16_t version = r.u16();
    if (version != kDatasetFormatVersion) {
        throw std::runtime_error("unsupported dataset format version " +
                                 std::to_string(version) + " (expected " +
                                 std::to_string(kDatasetFormatVersion) + ")");
    }
    const std::uint32_t c = r.u32();
    const std::uint32_t t = r.u32();
    const std::uint32_t n = r.u32();
    const std::uint32_t o = r.u32();
    const double rate = r.f64();
    if (c == 0 || t < 4 || n == 0 || o == 0 || o > 255 || !std::isfinite(rate) || rate <= 0) {
        throw std::runtime_error("dataset parse error at byte " + std::to_string(r.offset()) +
                                 ": invalid header");
    }

    Dataset ds;
    ds.num_classes = static_cast<int>(o);
    ds.sample_rate_hz = rate;
    ds.trials.reserve(n);
    std::vector<Provenance> provenance;
    provenance.reserve(n);
    bool any_known = false;

    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint8_t label = r.u8();
        if (label >= o) {
            throw std::runtime_error("dataset parse error at byte " +
                                     std::to_string(r.offset() - 1) + ": trial " +
                                     std::to_string(i) + " label " + std::to_string(label) +
                                     " >= num_classes");
        }
        const std::uint8_t prov = r.u8();
        if (prov != kProvenanceUnknown && prov > 2) {
            throw std::runtime_error("dataset parse error at byte " +
                                     std::to_string(r.offset() - 1) +
                                     ": invalid provenance tag " + std::to_string(prov));
        }
        if (prov != kProvenanceUnknown) any_known = true;
        provenance.push_back(prov == kProvenanceUnknown ? Provenance::clean
                                                        : static_cast<Provenance>(prov));

        Matrix signal(c, t);
        for (std::size_t k = 0; k < signal.size(); ++k) {
            const double v = r.f64();
            if (!std::isfinite(v)) {
                throw std::runtime_error("dataset parse error at byte " +
                                         std::to_string(r.offset() - 8) +
                                         ": non-finite signal value");
            }
            signal.data()[k] = v;
        }
        ds.trials.push_back({std::move(signal), static_cast<int>(label)});
    }
    if (!r.at_eof()) {
        throw std::runtime_error("dataset parse error at byte " + std::to_string(r.offset()) +
                                 ": trailing bytes after last trial");
    }
    if (any_known) ds.provenance = std::move(provenance);
    ds.validate();
    return ds;
}

namespace {

[[noreturn]] void csv_fail(std::size_t line, const std::string& what) {
    throw std::runtime_error("csv parse error at line " + std::to_string(line) + ": " + what);
}

long long parse_ll(const std::string& field, std::size_t line, const char* name) {
    long long v = 0;
    const auto* begin = field.data();
    const auto* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end) csv_fail(line, std::string("bad ") + name + " '" + field + "'");
    return v;
}

double parse_f64(const std::string& field, std::size_t line, const char* name) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(field, &pos);
        if (pos != field.size() || !std::isfinite(v)) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        csv_fail(line, std::string("bad ") + name + " '" + field + "'");
    }
}

} // namespace

Dataset load_dataset_csv(const std::filesystem::path& path, double sample_rate_hz) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_dataset_csv: cannot open " + path.string());

    struct Cell {
        long long trial, channel, time, label;
        double value;
    };
    std::vector<Cell> cells;
    long long max_trial = -1, max_channel = -1, max_time = -1, max_label = -1;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("trial", 0) == 0) continue; // header

        std::array<std::string, 5> fields;
        std::size_t field_count = 0;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) {
            if (field_count >= fields.size()) csv_fail(line_no, "expected 5 columns");
            fields[field_count++] = field;
        }
        if (field_count != 5) csv_fail(line_no, "expected 5 columns, got " +
                                                    std::to_string(field_count));

        Cell cell{};
        cell.trial = parse_ll(fields[0], line_no, "trial index");
        cell.channel = parse_ll(fields[1], line_no, "channel index");
        cell.time = parse_ll(fields[2], line_no, "time index");
        cell.value = parse_f64(fields[3], line_no, "value");
        cell.label = parse_ll(fields[4], line_no, "label");
        if (cell.trial < 0 || cell.channel < 0 || cell.time < 0 || cell.label < 0) {
            csv_fail(line_no, "negative index");
        }
        max_trial = std::max(max_trial, cell.trial);
        max_channel = std::max(max_channel, cell.channel);
        max_time = std::max(max_time, cell.time);
        max_label = std::max(max_label, cell.label);
        cells.push_back(cell);
    }
    if (cells.empty()) csv_fail(line_no == 0 ? 1 : line_no, "no data rows");

    const std::size_t n = static_cast<std::size_t>(max_trial + 1);
    const std::size_t c = static_cast<std::size_t>(max_channel + 1);
    const std::size_t t = static_cast<std::size_t>(max_time + 1);
    if (cells.size() != n * c * t) {
        csv_fail(line_no, "expected " + std::to_string(n * c * t) + " cells for " +
                              std::to_string(n) + " trials x " + std::to_string(c) +
                              " channels x " + std::to_string(t) + " times, got " +
                              std::to_string(cells.size()));
    }

    Dataset ds;
    ds.num_classes = static_cast<int>(max_label + 1);
    ds.sample_rate_hz = sample_rate_hz;
    ds.trials.assign(n, Trial{Matrix(c, t), -1});
    std::vector<bool> seen(n * c * t, false);
    for (const Cell& cell : cells) {
        const std::size_t idx = static_cast<std::size_t>(cell.trial) * c * t +
                                static_cast<std::size_t>(cell.channel) * t +
                                static_cast<std::size_t>(cell.time);
        if (seen[idx]) {
            csv_fail(line_no, "duplicate cell for trial " + std::to_string(cell.trial) +
                                  " channel " + std::to_string(cell.channel) + " time " +
                                  std::to_string(cell.time));
        }
        seen[idx] = true;
        Trial& trial = ds.trials[static_cast<std::size_t>(cell.trial)];
        if (trial.label < 0) {
            trial.label = static_cast<int>(cell.label);
        } else if (trial.label != static_cast<int>(cell.label)) {
            csv_fail(line_no, "trial " + std::to_string(cell.trial) +
                                  " has inconsistent labels");
        }
        trial.signal(static_cast<std::size_t>(cell.channel),
                     static_cast<std::size_t>(cell.time)) = cell.value;
    }
    ds.validate();
    return ds;
}

} // namespace sdom
