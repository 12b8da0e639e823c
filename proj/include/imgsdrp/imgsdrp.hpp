#pragma once

#include "imgsdrp/config.hpp"
#include "imgsdrp/engine.hpp"
#include "imgsdrp/errors.hpp"
#include "imgsdrp/measure.hpp"
#include "imgsdrp/metrics.hpp"
#include "imgsdrp/mobility.hpp"
#include "imgsdrp/protocol.hpp"
#include "imgsdrp/radio.hpp"
#include "imgsdrp/routing.hpp"
#include "imgsdrp/scenario.hpp"
