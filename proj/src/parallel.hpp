#pragma once
// Exceptions must not escape an OpenMP region; keep the first and rethrow it
// after the loop.

#include <exception>
#include <mutex>

namespace cpsr::detail {

class ExceptionSlot {
public:
    template <typename F>
    void run(F&& f) noexcept {
        try {
            f();
        } catch (...) {
            std::lock_guard lock(mutex_);
            if (!error_) error_ = std::current_exception();
        }
    }

    void rethrow() const {
        if (error_) std::rethrow_exception(error_);
    }

private:
    std::mutex mutex_;
    std::exception_ptr error_;
};

}  // namespace cpsr::detail
