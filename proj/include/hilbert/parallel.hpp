#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

namespace hilbert {

// Number of worker threads; honours HILBERT_THREADS when set.
int thread_count();

// Caps the OpenMP team size for the rest of the process.
void set_thread_count(int n);

// Holds the first exception thrown inside a parallel loop body; rethrown after the loop.
class ExceptionSlot {
public:
    template <class F>
    void run(F&& f) noexcept {
        try {
            f();
        } catch (...) {
            std::lock_guard<std::mutex> lk(m_);
            if (!p_) p_ = std::current_exception();
        }
    }
    void rethrow() const {
        if (p_) std::rethrow_exception(p_);
    }

private:
    std::mutex m_;
    std::exception_ptr p_;
};

} // namespace hilbert
