#include "ksamp/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace ksamp {
namespace {

// FFTW plan creation is not thread-safe; executing a plan on fresh buffers
// is. Plans are cached per (h, w, sign) and created FFTW_UNALIGNED so they
// accept whatever buffers std::vector hands us.
class PlanCache {
public:
    fftw_plan get(int h, int w, int sign) {
        std::lock_guard<std::mutex> lock(mu_);
        auto key = std::make_tuple(h, w, sign);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        // Scratch buffers are only inspected during planning (FFTW_ESTIMATE
        // does not touch their contents) and can be freed afterwards.
        auto* a = fftw_alloc_complex(std::size_t(h) * std::size_t(w));
        auto* b = fftw_alloc_complex(std::size_t(h) * std::size_t(w));
        fftw_plan p = fftw_plan_dft_2d(h, w, a, b, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
        fftw_free(a);
        fftw_free(b);
        plans_.emplace(key, p);
        return p;
    }

private:
    std::mutex mu_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

ComplexImage transform(const ComplexImage& in, int sign, const char* name) {
    require(in.height >= 1 && in.width >= 1, ErrorKind::InvalidArgument,
            std::string(name) + ": empty image");
    require(all_finite(in), ErrorKind::Numeric, std::string(name) + ": non-finite input");

    ComplexImage out(in.height, in.width);
    ComplexImage tmp = in;  // fftw_execute_dft may not take const input
    fftw_plan plan = cache().get(in.height, in.width, sign);
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(tmp.data.data()),
                     reinterpret_cast<fftw_complex*>(out.data.data()));

    const double scale = 1.0 / std::sqrt(double(in.height) * double(in.width));
    for (auto& z : out.data) z *= scale;
    return out;
}

}  // namespace

ComplexImage fft2(const ComplexImage& img) { return transform(img, FFTW_FORWARD, "fft2"); }

ComplexImage ifft2(const ComplexImage& spec) { return transform(spec, FFTW_BACKWARD, "ifft2"); }

}  // namespace ksamp
