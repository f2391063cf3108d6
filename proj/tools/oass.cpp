// Copyright 2026 The OASS Authors.
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

// Command-line frontend: evaluation, fusion, augmentation, self-training
// utilities, gradient checks, synthetic fixtures and rendering.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oass/aomix.hpp"
#include "oass/io/dataset.hpp"
#include "oass/io/instance_json.hpp"
#include "oass/io/png_io.hpp"
#include "oass/io/probs.hpp"
#include "oass/io/render.hpp"
#include "oass/io/report_json.hpp"
#include "oass/io/synth.hpp"
#include "oass/metrics.hpp"
#include "oass/nn/gradcheck.hpp"
#include "oass/oafusion.hpp"
#include "oass/selftrain.hpp"

namespace {

using namespace oass;

int resolve_threads(int flag_value) {
  if (const char* env = std::getenv("OASS_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (...) {
      throw ValidationError("OASS_THREADS is not a valid thread count");
    }
  }
  return flag_value;
}

void save_mask_png(const std::string& path, const BinaryMask& mask) {
  auto dense = mask.to_dense();
  for (auto& v : dense) v = v ? 255 : 0;
  io::detail_png::write_png(path, mask.height(), mask.width(), 8, PNG_COLOR_TYPE_GRAY, dense);
}

std::vector<BinaryMask> amodal_masks_of(const std::vector<InstanceAnnotation>& insts) {
  std::vector<BinaryMask> out;
  out.reserve(insts.size());
  for (const auto& inst : insts) out.push_back(inst.amodal);
  return out;
}

int run_evaluate(const std::string& pred_dir, const std::string& gt_dir, int num_classes,
                 int threads, const std::string& out_path) {
  const auto preds = io::load_dataset(pred_dir, num_classes);
  const auto gts = io::load_dataset(gt_dir, num_classes);
  const OassReport report = evaluate_oass(preds, gts, ClassUniverse::street18(),
                                          resolve_threads(threads));
  io::print_report_table(std::cout, report);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw IoError("cannot open '" + out_path + "' for writing");
    out << io::report_to_json(report).dump(2) << '\n';
  }
  return 0;
}

int run_fuse(const std::string& semantic_path, const std::string& instances_path,
             const std::string& amodal_path, double score_threshold, int num_classes,
             const std::string& out_dir, const std::string& id) {
  BranchOutputs branches;
  branches.semantic = io::load_semantic(semantic_path, num_classes);
  branches.instances = io::load_instances(instances_path);
  branches.amodal_instances =
      amodal_path.empty() ? branches.instances : io::load_instances(amodal_path);
  const OassOutputs outputs = run_oafusion(branches, score_threshold);
  io::save_bundle(out_dir, id, io::bundle_of(outputs));
  std::cout << "fused " << outputs.instances.size() << " instances, "
            << outputs.amodal_instances.size() << " amodal instances, "
            << outputs.panoptic.segments.size() << " panoptic segments -> " << out_dir << "/"
            << id << "_*\n";
  return 0;
}

int run_aomix_cmd(const std::string& source_path, const std::string& source_semantic_path,
                  const std::string& source_instances_path, const std::string& mr_instances_path,
                  const std::string& target_path, const AoMixConfig& cfg, int num_classes,
                  const std::string& out_dir, const std::string& id) {
  const Image source = io::load_image(source_path);
  const SemanticMap labels = io::load_semantic(source_semantic_path, num_classes);
  const auto source_insts = io::load_instances(source_instances_path);
  const auto mr_insts = mr_instances_path.empty() ? source_insts
                                                  : io::load_instances(mr_instances_path);
  const Image target = io::load_image(target_path);

  Rng rng(cfg.seed);
  const BinaryMask random_mask = build_random_mask(amodal_masks_of(mr_insts), cfg, rng);
  const Image masked = mask_source_image(source, amodal_masks_of(source_insts), random_mask, cfg);
  const MixResult mix = class_mix(masked, labels, target, cfg, rng);

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path root(out_dir);
  save_mask_png((root / (id + "_random_mask.png")).string(), random_mask);
  io::save_image((root / (id + "_masked_source.png")).string(), mix.masked_source);
  io::save_image((root / (id + "_mixed_image.png")).string(), mix.mixed_image);
  io::save_semantic((root / (id + "_mixed_label.png")).string(), mix.mixed_label);
  save_mask_png((root / (id + "_provenance.png")).string(), mix.provenance);
  std::cout << "aomix wrote " << out_dir << "/" << id << "_* (seed " << cfg.seed << ")\n";
  return 0;
}

int run_pseudolabel(const std::string& probs_path, double tau, int margin_top, int margin_bottom,
                    const std::string& out_path) {
  const ProbTensor probs = io::load_probs(probs_path);
  const double omega = confidence_weight(probs, tau);
  SemanticMap pseudo = pseudo_label(probs);
  if (margin_top > 0 || margin_bottom > 0) {
    const BinaryMask margins =
        margin_ignore_mask(pseudo.height, pseudo.width, margin_top, margin_bottom);
    const auto dense = margins.to_dense();
    for (std::size_t i = 0; i < dense.size(); ++i)
      if (dense[i]) pseudo.labels[i] = kIgnoreLabel;
  }
  std::printf("omega %.6f\n", omega);
  if (!out_path.empty()) io::save_semantic(out_path, pseudo);
  return 0;
}

int run_ema(const std::string& teacher_path, const std::string& student_path, double eta,
            const std::string& out_path) {
  nn::Tensor teacher = io::load_tensor(teacher_path);
  const nn::Tensor student = io::load_tensor(student_path);
  detail::require(teacher.shape == student.shape, "teacher/student shape mismatch");
  ema_update(teacher.data, student.data, eta);
  io::save_tensor(out_path, teacher);
  std::cout << "ema updated " << teacher.data.size() << " parameters (eta " << eta << ")\n";
  return 0;
}

int run_gradcheck(const std::string& block_name, double eps, std::uint64_t seed, double threshold,
                  bool inject_fault) {
  nn::GradCheckBlock block;
  if (block_name == "gap") block = nn::GradCheckBlock::kGap;
  else if (block_name == "pool") block = nn::GradCheckBlock::kPool;
  else if (block_name == "ua") block = nn::GradCheckBlock::kUa;
  else if (block_name == "dpe") block = nn::GradCheckBlock::kDpe;
  else throw ValidationError("unknown block '" + block_name + "' (gap|pool|ua|dpe)");

  const auto report = nn::grad_check(block, seed, eps, inject_fault);
  std::printf("block %s seed %llu eps %g coords %zu max_rel_error %.3e\n", block_name.c_str(),
              static_cast<unsigned long long>(seed), eps, report.coords_checked,
              report.max_rel_error);
  return report.max_rel_error < threshold ? 0 : 1;
}

int run_synth(const io::SynthSpec& base, int count, const std::string& gt_dir,
              const std::string& pred_dir, const std::string& cert_path) {
  nlohmann::ordered_json certs;
  for (int i = 0; i < count; ++i) {
    io::SynthSpec spec = base;
    spec.seed = base.seed + static_cast<std::uint64_t>(i);
    const io::SynthScene scene = io::synth_scene(spec);
    char id[32];
    std::snprintf(id, sizeof id, "scene_%05d", i);
    io::save_bundle(gt_dir, id, scene.gt);
    io::save_bundle(pred_dir, id, scene.pred);
    nlohmann::ordered_json c;
    c["miou"] = scene.certificate.miou;
    c["map"] = scene.certificate.map;
    c["maap"] = scene.certificate.maap;
    c["mpq"] = scene.certificate.mpq;
    c["mapq"] = scene.certificate.mapq;
    certs[id] = std::move(c);
  }
  if (!cert_path.empty()) {
    std::ofstream out(cert_path);
    if (!out) throw IoError("cannot open '" + cert_path + "' for writing");
    out << certs.dump(2) << '\n';
  }
  std::cout << "wrote " << count << " scenes to " << gt_dir << " and " << pred_dir << '\n';
  return 0;
}

int run_render(const std::string& input, const std::string& mode, int num_classes,
               const std::string& out_path) {
  Image img;
  if (mode == "semantic") {
    img = io::render_semantic(io::load_semantic(input, num_classes));
  } else if (mode == "panoptic") {
    img = io::render_panoptic(io::load_panoptic(input));
  } else {
    throw ValidationError("unknown render mode '" + mode + "' (semantic|panoptic)");
  }
  io::save_image(out_path, img);
  std::cout << "rendered " << input << " -> " << out_path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Occlusion-aware seamless segmentation toolkit"};
  app.require_subcommand(1);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Five-metric evaluation of a prediction set");
  std::string ev_pred, ev_gt, ev_out;
  int ev_classes = 18, ev_threads = 1;
  evaluate->add_option("--pred", ev_pred, "prediction dataset directory")->required();
  evaluate->add_option("--gt", ev_gt, "ground-truth dataset directory")->required();
  evaluate->add_option("--num-classes", ev_classes, "semantic class count");
  evaluate->add_option("--threads", ev_threads, "worker threads (env OASS_THREADS overrides)");
  evaluate->add_option("--out", ev_out, "write the report JSON here");

  // fuse
  auto* fuse = app.add_subcommand("fuse", "Occlusion-aware fusion of branch outputs");
  std::string fu_semantic, fu_instances, fu_amodal, fu_dir = ".", fu_id = "fused";
  double fu_threshold = 0.95;
  int fu_classes = 18;
  fuse->add_option("--semantic", fu_semantic, "semantic branch PNG")->required();
  fuse->add_option("--instances", fu_instances, "instance branch JSON")->required();
  fuse->add_option("--amodal-instances", fu_amodal, "amodal instance branch JSON");
  fuse->add_option("--score-threshold", fu_threshold, "detection score threshold");
  fuse->add_option("--num-classes", fu_classes, "semantic class count");
  fuse->add_option("--out-dir", fu_dir, "output directory");
  fuse->add_option("--id", fu_id, "output file prefix");

  // aomix
  auto* aomix = app.add_subcommand("aomix", "Amodal-oriented mix augmentation");
  std::string am_source, am_semantic, am_instances, am_mr, am_target, am_dir = ".", am_id = "aomix";
  AoMixConfig am_cfg;
  int am_classes = 18;
  std::vector<int> am_fill{0, 0, 0};
  aomix->add_option("--source", am_source, "source image PNG")->required();
  aomix->add_option("--source-semantic", am_semantic, "source semantic PNG")->required();
  aomix->add_option("--source-instances", am_instances, "source instances JSON")->required();
  aomix->add_option("--mr-instances", am_mr,
                    "instances JSON supplying the random-mask shapes (default: source)");
  aomix->add_option("--target", am_target, "target image PNG")->required();
  aomix->add_option("--scale-min", am_cfg.scale_min, "random scale lower bound");
  aomix->add_option("--scale-max", am_cfg.scale_max, "random scale upper bound");
  aomix->add_option("--fill", am_fill, "fill value r g b")->expected(3);
  aomix->add_option("--class-fraction", am_cfg.class_fraction, "fraction of classes to mix");
  aomix->add_option("--seed", am_cfg.seed, "rng seed");
  aomix->add_option("--num-classes", am_classes, "semantic class count");
  aomix->add_option("--out-dir", am_dir, "output directory");
  aomix->add_option("--id", am_id, "output file prefix");

  // pseudolabel
  auto* pseudo = app.add_subcommand("pseudolabel", "Teacher pseudo-labels and confidence weight");
  std::string pl_probs, pl_out;
  double pl_tau = 0.968;
  int pl_top = 11, pl_bottom = 88;
  pseudo->add_option("--probs", pl_probs, "probability tensor file")->required();
  pseudo->add_option("--tau", pl_tau, "confidence threshold");
  pseudo->add_option("--margin-top", pl_top, "ignored rows at the top");
  pseudo->add_option("--margin-bottom", pl_bottom, "ignored rows at the bottom");
  pseudo->add_option("--out", pl_out, "pseudo-label map PNG");

  // ema
  auto* ema = app.add_subcommand("ema", "Exponential-moving-average teacher update");
  std::string em_teacher, em_student, em_out;
  double em_eta = 0.999;
  ema->add_option("--teacher", em_teacher, "teacher tensor file")->required();
  ema->add_option("--student", em_student, "student tensor file")->required();
  ema->add_option("--eta", em_eta, "EMA decay");
  ema->add_option("--out", em_out, "updated teacher tensor file")->required();

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient verification");
  std::string gc_block;
  double gc_eps = 1e-5, gc_threshold = 1e-5;
  std::uint64_t gc_seed = 0;
  bool gc_fault = false;
  gradcheck->add_option("--block", gc_block, "gap|pool|ua|dpe")->required();
  gradcheck->add_option("--eps", gc_eps, "finite-difference step");
  gradcheck->add_option("--seed", gc_seed, "fixture seed");
  gradcheck->add_option("--threshold", gc_threshold, "pass/fail bound on max relative error");
  gradcheck->add_flag("--inject-fault", gc_fault, "corrupt one backward term (harness self-test)");

  // synth
  auto* synth = app.add_subcommand("synth", "Synthetic scene and certificate generator");
  io::SynthSpec sy_spec;
  int sy_count = 1;
  std::string sy_gt, sy_pred, sy_cert;
  synth->add_option("--count", sy_count, "number of scenes");
  synth->add_option("--height", sy_spec.height, "scene height");
  synth->add_option("--width", sy_spec.width, "scene width");
  synth->add_option("--min-objects", sy_spec.min_objects, "minimum object count");
  synth->add_option("--max-objects", sy_spec.max_objects, "maximum object count");
  synth->add_option("--occlusion-prob", sy_spec.occlusion_prob, "occluded placement probability");
  synth->add_option("--perturbation", sy_spec.perturbation, "prediction noise in [0,1]");
  synth->add_option("--seed", sy_spec.seed, "base seed (scene i uses seed+i)");
  synth->add_option("--out-gt", sy_gt, "ground-truth output directory")->required();
  synth->add_option("--out-pred", sy_pred, "prediction output directory")->required();
  synth->add_option("--certificate", sy_cert, "expected-metric JSON");

  // render
  auto* render = app.add_subcommand("render", "Color-map rendering of label maps");
  std::string rd_input, rd_mode = "semantic", rd_out;
  int rd_classes = 18;
  render->add_option("--input", rd_input, "input PNG")->required();
  render->add_option("--mode", rd_mode, "semantic|panoptic");
  render->add_option("--num-classes", rd_classes, "semantic class count");
  render->add_option("--out", rd_out, "output RGB PNG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (evaluate->parsed())
      return run_evaluate(ev_pred, ev_gt, ev_classes, ev_threads, ev_out);
    if (fuse->parsed())
      return run_fuse(fu_semantic, fu_instances, fu_amodal, fu_threshold, fu_classes, fu_dir, fu_id);
    if (aomix->parsed()) {
      am_cfg.fill_value = {static_cast<std::uint8_t>(am_fill[0]),
                           static_cast<std::uint8_t>(am_fill[1]),
                           static_cast<std::uint8_t>(am_fill[2])};
      return run_aomix_cmd(am_source, am_semantic, am_instances, am_mr, am_target, am_cfg,
                           am_classes, am_dir, am_id);
    }
    if (pseudo->parsed()) return run_pseudolabel(pl_probs, pl_tau, pl_top, pl_bottom, pl_out);
    if (ema->parsed()) return run_ema(em_teacher, em_student, em_eta, em_out);
    if (gradcheck->parsed()) return run_gradcheck(gc_block, gc_eps, gc_seed, gc_threshold, gc_fault);
    if (synth->parsed()) return run_synth(sy_spec, sy_count, sy_gt, sy_pred, sy_cert);
    if (render->parsed()) return run_render(rd_input, rd_mode, rd_classes, rd_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
