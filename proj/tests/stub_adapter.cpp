// Line-protocol adapter for tests: fails when x[0] >= threshold.
//
//   stub_adapter [threshold] [fault] [after]
//
// fault: none | garbage | hang | exit | no-ready. The fault fires on the
// reply to EVAL number `after` (1-based; default 1).

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

int main(int argc, char** argv) {
  const double threshold = argc > 1 ? std::atof(argv[1]) : 4.0;
  const std::string fault = argc > 2 ? argv[2] : "none";
  const long after = argc > 3 ? std::atol(argv[3]) : 1;

  std::string line;
  long evals = 0;
  int dim = 0;
  while (std::getline(std::cin, line)) {
    std::istringstream in(line);
    std::string cmd;
    in >> cmd;
    if (cmd == "HELLO") {
      in >> dim;
      std::cout << (fault == "no-ready" ? "HI" : "READY") << std::endl;
    } else if (cmd == "EVAL") {
      ++evals;
      std::vector<double> v;
      double x = 0.0;
      while (in >> x) v.push_back(x);
      if (evals == after) {
        if (fault == "garbage") {
          std::cout << "2" << std::endl;
          continue;
        }
        if (fault == "hang") {
          std::this_thread::sleep_for(std::chrono::seconds(60));
        }
        if (fault == "exit") return 3;
      }
      if (static_cast<int>(v.size()) != dim) {
        std::cout << "ERROR arity" << std::endl;
        continue;
      }
      std::cout << (v[0] >= threshold ? "FAIL" : "PASS") << std::endl;
    } else if (cmd == "QUIT") {
      return 0;
    }
  }
  return 0;
}
