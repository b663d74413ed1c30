#pragma once

#include <atomic>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "bsodiag/fcm.hpp"
#include "bsodiag/model.hpp"

namespace fixture {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("bsodiag-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline bsodiag::Event event(bsodiag::SnSet sns, std::string type, std::string cls, std::int64_t start,
                            std::int64_t end, bsodiag::EventSource src = bsodiag::EventSource::alert) {
  return bsodiag::Event{std::move(sns), std::move(type), std::move(cls), bsodiag::TimeRef{start},
                        bsodiag::TimeRef{end}, src};
}

inline bsodiag::FailureKnowledgeGraph mine(const std::vector<bsodiag::TaggedEvent>& history,
                                           const bsodiag::FailureTypeCatalog& catalog, double alpha = 0.001) {
  const auto groups = bsodiag::group_events(history);
  const auto q1 = bsodiag::mine_frequent_failures(groups, alpha);
  return bsodiag::build_fkg(bsodiag::mine_failure_pairs(q1, groups, alpha, catalog), {});
}

}  // namespace fixture
