#ifndef MIDR_TESTS_TEST_UTIL_H_
#define MIDR_TESTS_TEST_UTIL_H_

#include <fstream>
#include <sstream>
#include <string>

inline std::string read_test_file(const std::string &name) {
  std::ifstream in(std::string(MIDR_TEST_DATA) + "/" + name, std::ios::binary);
  if (!in) throw std::runtime_error("missing test data file " + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

#endif  // MIDR_TESTS_TEST_UTIL_H_
