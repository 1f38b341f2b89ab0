#include "ksamp/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "ksamp/rng.hpp"

namespace ksamp {
namespace {

constexpr char kMagic[6] = {'K', 'C', 'I', 'N', '1', '\0'};

void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(char((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& buf, float f) {
    put_u32(buf, std::bit_cast<std::uint32_t>(f));
}

class Reader {
public:
    Reader(const std::string& bytes, const std::string& path) : bytes_(bytes), path_(path) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(bytes_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }

    std::uint8_t u8() {
        need(1);
        return std::uint8_t(bytes_[pos_++]);
    }

    float f32() { return std::bit_cast<float>(u32()); }

    bool exhausted() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) {
        require(pos_ + n <= bytes_.size(), ErrorKind::MissingArtifact,
                "truncated dataset file: " + path_);
    }

    const std::string& bytes_;
    std::string path_;
    std::size_t pos_ = 0;
};

void append_series(std::string& header, std::string& payload, const CineSeries& s,
                   std::uint8_t split) {
    put_u32(header, s.id);
    put_u32(header, std::uint32_t(s.frames.size()));
    put_u32(header, std::uint32_t(s.frames.front().height));
    put_u32(header, std::uint32_t(s.frames.front().width));
    header.push_back(char(split));
    for (const auto& f : s.frames) {
        for (const auto& z : f.data) {
            put_f32(payload, float(z.real()));
            put_f32(payload, float(z.imag()));
        }
    }
}

}  // namespace

void write_dataset(const Dataset& ds, const std::string& path) {
    std::string header, payload;
    std::uint32_t count = std::uint32_t(ds.train.size() + ds.test.size());
    put_u32(header, count);
    for (const auto& s : ds.train) append_series(header, payload, s, 0);
    for (const auto& s : ds.test) append_series(header, payload, s, 1);

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorKind::Io, "cannot open for writing: " + path);
    out.write(kMagic, sizeof(kMagic));
    out.write(header.data(), std::streamsize(header.size()));
    out.write(payload.data(), std::streamsize(payload.size()));
    require(out.good(), ErrorKind::Io, "write failed: " + path);
}

Dataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::MissingArtifact, "missing dataset file: " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    require(bytes.size() >= sizeof(kMagic) &&
                std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) == 0,
            ErrorKind::MissingArtifact, "bad magic in dataset file: " + path);

    const std::string body = bytes.substr(sizeof(kMagic));
    Reader r(body, path);
    const std::uint32_t count = r.u32();

    struct Head {
        std::uint32_t id, frames, h, w;
        std::uint8_t split;
    };
    std::vector<Head> heads;
    for (std::uint32_t i = 0; i < count; ++i) {
        Head hd{r.u32(), r.u32(), r.u32(), r.u32(), r.u8()};
        require(hd.h >= 1 && hd.w >= 1 && hd.frames >= 1 && hd.split <= 1,
                ErrorKind::MissingArtifact, "bad series header in dataset file: " + path);
        heads.push_back(hd);
    }

    Dataset ds;
    for (const auto& hd : heads) {
        CineSeries s;
        s.id = hd.id;
        for (std::uint32_t t = 0; t < hd.frames; ++t) {
            ComplexImage img(int(hd.h), int(hd.w));
            for (auto& z : img.data) {
                double re = double(r.f32());
                double im = double(r.f32());
                z = cplx(re, im);
            }
            s.frames.push_back(std::move(img));
        }
        (hd.split == 0 ? ds.train : ds.test).push_back(std::move(s));
    }
    require(r.exhausted(), ErrorKind::MissingArtifact, "trailing bytes in dataset file: " + path);
    return ds;
}

Dataset split_dataset(const std::vector<CineSeries>& series, double train_fraction,
                      std::uint64_t seed) {
    require(series.size() >= 2, ErrorKind::InvalidArgument, "split_dataset: need >= 2 series");
    require(train_fraction > 0.0 && train_fraction < 1.0, ErrorKind::InvalidArgument,
            "split_dataset: fraction must be in (0, 1)");

    std::vector<std::size_t> order(series.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);

    long n_train = std::lround(train_fraction * double(series.size()));
    n_train = std::max<long>(1, std::min<long>(long(series.size()) - 1, n_train));

    Dataset ds;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (long(i) < n_train ? ds.train : ds.test).push_back(series[order[i]]);
    }
    return ds;
}

std::vector<const CineSeries*> all_series(const Dataset& ds) {
    std::vector<const CineSeries*> out;
    for (const auto& s : ds.train) out.push_back(&s);
    for (const auto& s : ds.test) out.push_back(&s);
    return out;
}

}  // namespace ksamp
