// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gsm/anim/replay.hpp"
#include "gsm/anim/sequence.hpp"
#include "gsm/binding.hpp"
#include "gsm/core/camera.hpp"
#include "gsm/core/error.hpp"
#include "gsm/core/image.hpp"
#include "gsm/core/math.hpp"
#include "gsm/core/mesh.hpp"
#include "gsm/core/shapes.hpp"
#include "gsm/core/surfel.hpp"
#include "gsm/extract/bvh.hpp"
#include "gsm/extract/meshops.hpp"
#include "gsm/extract/raster.hpp"
#include "gsm/extract/simplify.hpp"
#include "gsm/extract/tsdf.hpp"
#include "gsm/extract/uv_atlas.hpp"
#include "gsm/fit/adam.hpp"
#include "gsm/fit/displace.hpp"
#include "gsm/fit/fitter.hpp"
#include "gsm/fit/losses.hpp"
#include "gsm/fit/optimizers.hpp"
#include "gsm/garment/stage.hpp"
#include "gsm/io/camera_json.hpp"
#include "gsm/io/config.hpp"
#include "gsm/io/manifest.hpp"
#include "gsm/io/obj.hpp"
#include "gsm/io/pfm.hpp"
#include "gsm/io/ply.hpp"
#include "gsm/io/png.hpp"
#include "gsm/io/volume.hpp"
#include "gsm/refine/pass.hpp"
#include "gsm/refine/refiner.hpp"
#include "gsm/refine/weights.hpp"
#include "gsm/render/renderer.hpp"
