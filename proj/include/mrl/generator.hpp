#pragma once

#include <coroutine>
#include <exception>
#include <iterator>
#include <memory>
#include <utility>

namespace mrl {

/// A lazy, single-consumer sequence produced by a coroutine. Iteration
/// resumes the coroutine; abandoning the generator early destroys it.
template <class T>
class Generator {
 public:
  struct promise_type {
    const T* current = nullptr;
    std::exception_ptr error;

    Generator get_return_object() {
      return Generator{std::coroutine_handle<promise_type>::from_promise(*this)};
    }
    std::suspend_always initial_suspend() noexcept { return {}; }
    std::suspend_always final_suspend() noexcept { return {}; }
    std::suspend_always yield_value(const T& v) noexcept {
      current = std::addressof(v);
      return {};
    }
    void return_void() noexcept {}
    void unhandled_exception() { error = std::current_exception(); }
  };

  class iterator {
   public:
    using value_type = T;
    using difference_type = std::ptrdiff_t;

    iterator() = default;
    explicit iterator(std::coroutine_handle<promise_type> h) : h_(h) {}

    const T& operator*() const { return *h_.promise().current; }
    const T* operator->() const { return h_.promise().current; }
    iterator& operator++() {
      advance(h_);
      return *this;
    }
    void operator++(int) { ++*this; }
    bool operator==(std::default_sentinel_t) const { return !h_ || h_.done(); }

   private:
    std::coroutine_handle<promise_type> h_;
  };

  Generator() = default;
  explicit Generator(std::coroutine_handle<promise_type> h) : h_(h) {}
  Generator(Generator&& other) noexcept : h_(std::exchange(other.h_, {})) {}
  Generator& operator=(Generator&& other) noexcept {
    if (this != &other) {
      reset();
      h_ = std::exchange(other.h_, {});
    }
    return *this;
  }
  Generator(const Generator&) = delete;
  Generator& operator=(const Generator&) = delete;
  ~Generator() { reset(); }

  iterator begin() {
    if (h_ && !started_) {
      started_ = true;
      advance(h_);
    }
    return iterator{h_};
  }
  std::default_sentinel_t end() const { return {}; }

  /// Pull-style access: advances and reports whether a value is available.
  bool next() {
    if (!h_ || h_.done()) return false;
    started_ = true;
    advance(h_);
    return !h_.done();
  }
  const T& value() const { return *h_.promise().current; }

 private:
  static void advance(std::coroutine_handle<promise_type> h) {
    h.resume();
    if (h.promise().error) std::rethrow_exception(std::exchange(h.promise().error, nullptr));
  }

  void reset() {
    if (h_) h_.destroy();
    h_ = {};
  }

  std::coroutine_handle<promise_type> h_;
  bool started_ = false;
};

}  // namespace mrl
