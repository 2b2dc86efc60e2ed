// Stand-in for an external evaluator process, for protocol tests.
//
//   fake_adapter constant     every request scores 0.5
//   fake_adapter id           value = request id
//   fake_adapter reverse N    buffer N requests, answer in reverse order, value = id
//   fake_adapter error        {"id": .., "error": "bad fold"}
//   fake_adapter silent       never answers
//   fake_adapter garbage      answers with a non-JSON line
//   fake_adapter unknown-id   answers with an id nobody asked for
//   fake_adapter exit         exits with status 3 at the first request
//   fake_adapter no-holdout   0.5 for "evaluate", an error for any other op
//   fake_adapter rows         value = number of rows in the request

#include <algorithm>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

using nlohmann::json;

int main(int argc, char** argv) {
  const std::string mode = argc > 1 ? argv[1] : "constant";
  const std::size_t batch = argc > 2 ? std::stoul(argv[2]) : 1;
  std::vector<json> held;
  for (std::string line; std::getline(std::cin, line);) {
    const json req = json::parse(line, nullptr, false);
    if (req.is_discarded()) {
      std::cout << json{{"id", nullptr}, {"error", "bad json"}}.dump() << std::endl;
      continue;
    }
    const auto id = req.value("id", std::int64_t{-1});
    json reply = {{"id", id}};
    if (mode == "constant") reply["value"] = 0.5;
    else if (mode == "id") reply["value"] = id;
    else if (mode == "error") reply["error"] = "bad fold";
    else if (mode == "silent") continue;
    else if (mode == "garbage") {
      std::cout << "this is not json" << std::endl;
      continue;
    } else if (mode == "unknown-id") reply["id"] = id + 1000, reply["value"] = 0.5;
    else if (mode == "exit") return 3;
    else if (mode == "no-holdout") {
      if (req.value("op", "") == "evaluate") reply["value"] = 0.5;
      else reply["error"] = "unknown op " + req.value("op", "");
    } else if (mode == "rows") reply["value"] = req.contains("rows") ? req["rows"].size() : 0;
    else if (mode == "reverse") {
      reply["value"] = id;
      held.push_back(reply);
      if (held.size() < batch) continue;
      std::reverse(held.begin(), held.end());
      for (const auto& h : held) std::cout << h.dump() << "\n";
      std::cout.flush();
      held.clear();
      continue;
    } else {
      std::cerr << "unknown mode " << mode << "\n";
      return 2;
    }
    std::cout << reply.dump() << std::endl;
  }
  return 0;
}
