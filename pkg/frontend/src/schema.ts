import { z } from 'zod';

// Mirror of the harness's prediction-file contract: a single top-level
// "predictions" array, no extra keys anywhere, corner-based pixel boxes.
export const predictionRecordSchema = z
  .object({
    frame_id: z.string().min(1),
    bbox: z.tuple([
      z.number().finite(),
      z.number().finite(),
      z.number().finite().positive(),
      z.number().finite().positive(),
    ]),
    score: z.number().min(0).max(1),
    label: z.string().min(1),
  })
  .strict();

export const predictionFileSchema = z
  .object({
    predictions: z.array(predictionRecordSchema),
  })
  .strict();

export type PredictionRecord = z.infer<typeof predictionRecordSchema>;
export type PredictionFile = z.infer<typeof predictionFileSchema>;
