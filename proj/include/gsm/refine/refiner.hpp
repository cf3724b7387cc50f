// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsm/core/error.hpp"
#include "gsm/core/image.hpp"
#include "gsm/io/pfm.hpp"
#include "gsm/io/png.hpp"

namespace gsm {

struct RefineInputs {
  ImageD view;           // current render of the schedule view
  ImageD weight;         // incident-angle weight map
  ImageD ref_canonical;  // current render from the canonical view
  ImageD ref_previous;   // current render from the previous view
  int view_index = 0;
};

// Image-in/image-out enhancement contract; the denoising model itself lives
// outside this artifact.
class Refiner {
 public:
  virtual ~Refiner() = default;
  virtual ImageD refine(const RefineInputs& in) = 0;
};

class IdentityRefiner : public Refiner {
 public:
  ImageD refine(const RefineInputs& in) override { return in.view; }
};

// Reads pre-made refinement images from disk: <dir>/<prefix>NNN.pfm or .png.
class FileRefiner : public Refiner {
 public:
  explicit FileRefiner(std::string dir, std::string prefix = "refined_")
      : dir_(std::move(dir)), prefix_(std::move(prefix)) {}

  ImageD refine(const RefineInputs& in) override {
    char name[64];
    std::snprintf(name, sizeof name, "%s%03d", prefix_.c_str(), in.view_index);
    std::filesystem::path base = std::filesystem::path(dir_) / name;
    std::filesystem::path pfm = base;
    pfm += ".pfm";
    std::filesystem::path png = base;
    png += ".png";
    ImageD img;
    if (std::filesystem::exists(pfm))
      img = read_pfm(pfm.string());
    else if (std::filesystem::exists(png))
      img = read_png_srgb(png.string());
    else
      throw RefinerFailure("FileRefiner: missing " + base.string() + ".{pfm,png}");
    if (img.width() != in.view.width() || img.height() != in.view.height())
      throw ShapeMismatch("FileRefiner: refined image size mismatch");
    return img;
  }

 private:
  std::string dir_;
  std::string prefix_;
};

// Subprocess protocol: writes {view.png, weight.pfm, ref0.png, refprev.png,
// meta.json} into the work directory, runs the command there, reads back
// refined.png. A non-zero exit maps to RefinerFailure.
class SubprocessRefiner : public Refiner {
 public:
  SubprocessRefiner(std::string command, std::string workdir)
      : command_(std::move(command)), workdir_(std::move(workdir)) {}

  ImageD refine(const RefineInputs& in) override {
    namespace fs = std::filesystem;
    fs::create_directories(workdir_);
    write_png_srgb((fs::path(workdir_) / "view.png").string(), in.view);
    write_pfm((fs::path(workdir_) / "weight.pfm").string(), in.weight);
    write_png_srgb((fs::path(workdir_) / "ref0.png").string(), in.ref_canonical);
    write_png_srgb((fs::path(workdir_) / "refprev.png").string(), in.ref_previous);
    nlohmann::json meta;
    meta["view_index"] = in.view_index;
    meta["width"] = in.view.width();
    meta["height"] = in.view.height();
    std::ofstream((fs::path(workdir_) / "meta.json").string()) << meta.dump(2) << "\n";

    std::string cmd = "cd '" + workdir_ + "' && " + command_;
    int rc = std::system(cmd.c_str());
    if (rc != 0)
      throw RefinerFailure("SubprocessRefiner: command exited with " + std::to_string(rc));
    fs::path refined = fs::path(workdir_) / "refined.png";
    if (!fs::exists(refined)) throw RefinerFailure("SubprocessRefiner: no refined.png produced");
    ImageD img = read_png_srgb(refined.string());
    if (img.width() != in.view.width() || img.height() != in.view.height())
      throw ShapeMismatch("SubprocessRefiner: refined image size mismatch");
    return img;
  }

 private:
  std::string command_;
  std::string workdir_;
};

// Wraps another refiner and records every call; used by contract tests.
class CaptureRefiner : public Refiner {
 public:
  explicit CaptureRefiner(Refiner* inner) : inner_(inner) {}

  ImageD refine(const RefineInputs& in) override {
    calls.push_back(in);
    return inner_->refine(in);
  }

  std::vector<RefineInputs> calls;

 private:
  Refiner* inner_;
};

}  // namespace gsm
