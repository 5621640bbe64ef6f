// Minimal external classifier honoring the job-file protocol: reads the
// training CSV, estimates class frequencies, and emits those frequencies as
// the probability row for every test sample.

#include <fstream>
#include <iostream>
#include <vector>

#include "json.hpp"
#include "nimai/csv.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: external_stub_classifier <job.json>\n";
    return 1;
  }
  try {
    nlohmann::json job;
    {
      std::ifstream in(argv[1]);
      in >> job;
    }
    const auto class_names =
        job.at("class_names").get<std::vector<std::string>>();

    // Count labels straight from the training CSV's last column.
    std::vector<double> counts(class_names.size(), 0.0);
    {
      std::ifstream in(job.at("train_csv").get<std::string>());
      std::string line;
      std::getline(in, line);  // header
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::string label = line.substr(line.rfind(',') + 1);
        for (std::size_t c = 0; c < class_names.size(); ++c)
          if (label == class_names[c]) counts[c] += 1.0;
      }
    }
    double total = 0.0;
    for (double c : counts) total += c;

    std::size_t test_rows = 0;
    {
      std::ifstream in(job.at("test_csv").get<std::string>());
      std::string line;
      std::getline(in, line);
      while (std::getline(in, line))
        if (!line.empty()) test_rows += 1;
    }

    std::ofstream out(job.at("output_csv").get<std::string>());
    for (std::size_t c = 0; c < class_names.size(); ++c)
      out << class_names[c] << (c + 1 < class_names.size() ? ',' : '\n');
    for (std::size_t r = 0; r < test_rows; ++r)
      for (std::size_t c = 0; c < class_names.size(); ++c)
        out << nimai::format_double(counts[c] / total)
            << (c + 1 < class_names.size() ? ',' : '\n');
  } catch (const std::exception& e) {
    std::cerr << "external_stub_classifier: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
