#pragma once

#include <stdexcept>
#include <string>

namespace srqr {

struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int run_experiment(const std::string& config, const std::string& out, unsigned threads,
                   bool verbose);
int run_certification(const std::string& config, const std::string& out, unsigned threads,
                      bool verbose);

inline int run_experiment(const std::string&, const std::string&, unsigned, bool) { return 2; }
inline int run_certification(const std::string&, const std::string&, unsigned, bool) { return 2; }

}  // namespace srqr
