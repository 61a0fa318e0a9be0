#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>

namespace socrasynth {

// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

// Trims and collapses internal whitespace runs to a single space.
std::string canonical_whitespace(std::string_view text);

// Shortest decimal that round-trips to the same double ("48", "4.8", "0.75").
std::string format_real(double value);

// Fixed-point with the given number of decimals.
std::string format_fixed(double value, int decimals);

std::string read_text_file(const std::filesystem::path& path);

// Milliseconds since the Unix epoch (wall) or a deterministic tick counter (logical).
using Clock = std::function<std::int64_t()>;
enum class ClockMode { Logical, Wall };

Clock make_clock(ClockMode mode);

// Heap box with value semantics, used for recursive value types.
template <class T>
class Box {
 public:
  Box() = default;
  explicit Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}
  Box(const Box& other) : ptr_(other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    if (this != &other) ptr_ = other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr;
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;

  explicit operator bool() const noexcept { return static_cast<bool>(ptr_); }
  const T& operator*() const { return *ptr_; }
  const T* operator->() const { return ptr_.get(); }
  T& operator*() { return *ptr_; }
  T* operator->() { return ptr_.get(); }

  friend bool operator==(const Box& a, const Box& b) {
    if (!a.ptr_ || !b.ptr_) return !a.ptr_ && !b.ptr_;
    return *a.ptr_ == *b.ptr_;
  }

 private:
  std::unique_ptr<T> ptr_;
};

}  // namespace socrasynth
