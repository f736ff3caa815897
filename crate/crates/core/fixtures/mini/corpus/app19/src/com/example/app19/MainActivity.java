package com.example.app19;

public class MainActivity {
    private String name = "item 19";

    public String label(int count) {
        String prefix = name.toUpperCase();
        return prefix + ":" + (count + 19);
    }

    public int total(int[] values) {
        int sum = 0;
        for (int v : values) {
            sum += v;
        }
        return sum;
    }
}
