// Copyright 2026 The palmgrip Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Python bindings. Structured values cross the boundary as JSON text; the
// package wrapper turns them into dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "palmgrip/experiment.hpp"
#include "palmgrip/json_io.hpp"
#include "palmgrip/protocol.hpp"
#include "palmgrip/sequencer.hpp"

namespace py = pybind11;
using namespace palmgrip;

namespace {

World load_world(const std::string& dir) { return dir.empty() ? World::load_default() : World::load(dir); }

std::string feasibility_json(const World& w, const std::string& object, const std::string& finger) {
  const auto r = w.feasibility(json::parse(object).get<ObjectSpec>(), parse_finger_type(finger));
  json j{{"feasible", r.feasible},
         {"reason", to_string(r.reason)},
         {"pinch_required", r.pinch_required},
         {"reach_limited", r.reach_limited}};
  j["grasp_u"] = r.grasp_u ? json(*r.grasp_u) : json(nullptr);
  return j.dump();
}

std::string suite(const World& w, const std::string& mode, std::uint64_t seed, int reps, int jobs,
                  const std::string& format) {
  SuiteConfig cfg;
  cfg.mode = parse_run_mode(mode);
  cfg.seed = seed;
  cfg.repetitions = reps;
  cfg.jobs = jobs;
  py::gil_scoped_release release;
  return render_report(run_suite(w, cfg), parse_report_format(format));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "palmgrip native core";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<RangeError>(m, "RangeError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<StateError>(m, "StateError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<ProtocolError>(m, "ProtocolError", base.ptr());

  m.def("set_data_dir", [](const std::string& d) { set_data_dir(d); });
  m.def("data_dir", [] { return data_dir().string(); });

  m.def("builtin_objects", [] { return json(builtin_objects()).dump(); });
  m.def("default_config", [] { return json(GripperConfig{}).dump(); });

  m.def(
      "fingertip_position",
      [](double theta, const std::string& finger) {
        const TipPosition t = fingertip_position(theta, GripperConfig{}, parse_finger_type(finger));
        return py::make_tuple(t.radial, t.vertical);
      },
      py::arg("theta_deg"), py::arg("finger_type"));

  py::class_<World>(m, "World")
      .def(py::init(&load_world), py::arg("data_dir") = "")
      .def("config", [](const World& w) { return json(w.config()).dump(); })
      .def("feasibility", &feasibility_json, py::arg("object"), py::arg("finger_type"))
      .def("convergence_height",
           [](const World& w, const std::string& f) { return w.convergence_height(parse_finger_type(f)); })
      .def(
          "run_trial",
          [](const World& w, const std::string& plan, std::uint64_t seed) {
            return json(run_trial(w, json::parse(plan).get<SequencePlan>(), seed)).dump();
          },
          py::arg("plan"), py::arg("seed") = 0)
      .def(
          "success_probability",
          [](const World& w, const std::string& plan) {
            return analytic_success_probability(w, json::parse(plan).get<SequencePlan>());
          },
          py::arg("plan"))
      .def("run_suite", &suite, py::arg("mode") = "deterministic", py::arg("seed") = 0,
           py::arg("repetitions") = kDefaultRepetitions, py::arg("jobs") = 1, py::arg("format") = "json");

  m.def("normalize_command", [](const std::string& text) { return serialize(parse_command(text)); });
  m.def("normalize_telemetry", [](const std::string& text) { return serialize(parse_telemetry(text)); });
}
