#pragma once

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

namespace ailp {

/// Counting semaphore with a runtime limit.
class Semaphore {
 public:
  explicit Semaphore(std::size_t limit) : available_(limit == 0 ? 1 : limit) {}

  void acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return available_ > 0; });
    --available_;
  }

  void release() {
    {
      std::lock_guard lock(mutex_);
      ++available_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::size_t available_;
};

class SemaphoreGuard {
 public:
  explicit SemaphoreGuard(Semaphore& s) : s_(&s) { s_->acquire(); }
  ~SemaphoreGuard() {
    if (s_) s_->release();
  }
  SemaphoreGuard(const SemaphoreGuard&) = delete;
  SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

 private:
  Semaphore* s_;
};

/// One semaphore per key (e.g. per host), created on first use.
class KeyedLimiter {
 public:
  explicit KeyedLimiter(std::size_t per_key) : per_key_(per_key) {}

  Semaphore& for_key(const std::string& key) {
    std::lock_guard lock(mutex_);
    auto& slot = slots_[key];
    if (!slot) slot = std::make_unique<Semaphore>(per_key_);
    return *slot;
  }

 private:
  std::size_t per_key_;
  std::mutex mutex_;
  std::map<std::string, std::unique_ptr<Semaphore>> slots_;
};

/// Applies `fn` to every element using up to `threads` workers; results keep
/// input order. `fn` must not throw.
template <class T, class Fn>
auto parallel_map(const std::vector<T>& items, std::size_t threads, Fn fn)
    -> std::vector<std::invoke_result_t<Fn&, const T&>> {
  using R = std::invoke_result_t<Fn&, const T&>;
  std::vector<std::optional<R>> slots(items.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < items.size(); i = next++) slots[i].emplace(fn(items[i]));
  };
  const std::size_t n = std::min(std::max<std::size_t>(threads, 1), std::max<std::size_t>(items.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  std::vector<R> out;
  out.reserve(items.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace ailp
